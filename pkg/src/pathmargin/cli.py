"""Command-line entry points.

Subcommands mirror the pipeline stages: train, kernel, nsv, bound,
skeleton recover, sweep, signatures, wbar-check, boundary, agree.
Every config key can be overridden with a flag of the same dotted name,
e.g. --training.learning_rate 0.005.

Exit codes: 0 success, 2 validation error, 3 gated refusal (no zero
training error), 4 non-separability, 5 budget refusal.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import harness
from .compression import BoundInputs, bound_exact_zte, bound_value, breakdown, is_vacuous
from .exceptions import (
    BudgetExceededError,
    GatedRefusalError,
    NonSeparableError,
    PathmarginError,
    ValidationError,
)
from .maxmargin import extract_nsvs, solution_from_json, solution_to_json, solve_hard_margin
from .network import load_weights, path_products, save_weights, train_sgd, zero_training_error
from .pathspace import gram_hash, kernel_matrix, save_gram, weights_hash
from .skeleton import (
    normalize_to_skeleton,
    prune_dead_neurons,
    recover_weights,
    skeleton_to_json,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_GATED = 3
EXIT_NONSEPARABLE = 4
EXIT_BUDGET = 5


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _collect_overrides(extra: list[str]) -> dict:
    """Interpret leftover '--a.b.c value' pairs as config overrides."""
    overrides = {}
    i = 0
    while i < len(extra):
        token = extra[i]
        if not token.startswith("--"):
            raise ValidationError(f"unexpected argument '{token}'")
        key = token[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            if i + 1 >= len(extra):
                raise ValidationError(f"override '{token}' is missing a value")
            value = extra[i + 1]
            i += 1
        overrides[key] = value
        i += 1
    return overrides


def _load_config(args, extra) -> harness.ExperimentConfig:
    if args.config is None:
        raise ValidationError("--config is required for this subcommand")
    return harness.load_config(args.config, _collect_overrides(extra))


def _build_dataset(config: harness.ExperimentConfig):
    data = harness.dataset_from_spec(config.dataset,
                                     harness.derive_seed(config.seed, "data"))
    if config.randomize_labels:
        data = harness.randomize_labels(data, harness.derive_seed(config.seed, "labels"))
    return data


def _out_path(config, flag_value, default_name):
    if flag_value:
        return flag_value
    if config.output_dir:
        os.makedirs(config.output_dir, exist_ok=True)
        return os.path.join(config.output_dir, default_name)
    return default_name


def cmd_train(args, extra) -> int:
    config = _load_config(args, extra)
    data = _build_dataset(config)
    net_cfg = config.network_config()
    hyper = config.training_config(harness.derive_seed(config.seed, "train"))
    result = train_sgd(data, net_cfg, hyper)
    out = _out_path(config, args.weights_out, "weights.json")
    save_weights(out, result.weights, net_cfg)
    _emit({
        "weights_path": out,
        "achieved_zero_training_error": result.achieved_zero_error,
        "iterations": result.iterations,
        "final_loss": result.final_loss,
        "m": len(data),
        "n": net_cfg.num_neurons,
    })
    return EXIT_OK


def cmd_kernel(args, extra) -> int:
    config = _load_config(args, extra)
    data = _build_dataset(config)
    weights, net_cfg = load_weights(args.weights)
    gram = kernel_matrix(data, weights, net_cfg)
    csv_path = _out_path(config, args.gram_out, "gram.csv")
    sidecar = csv_path + ".json"
    save_gram(gram, csv_path, sidecar, n_neurons=net_cfg.num_neurons,
              whash=weights_hash(weights, net_cfg), seed=config.seed)
    _emit({"gram_path": csv_path, "sidecar_path": sidecar, "m": gram.m})
    return EXIT_OK


def cmd_nsv(args, extra) -> int:
    config = _load_config(args, extra)
    data = _build_dataset(config)
    weights, net_cfg = load_weights(args.weights)
    if not zero_training_error(weights, net_cfg, data):
        raise GatedRefusalError(
            "weights do not achieve zero training error on this dataset; "
            "support-vector counts would not be comparable")
    gram = kernel_matrix(data, weights, net_cfg)
    solution = solve_hard_margin(gram, data.labels, **config.solver)
    _, s = extract_nsvs(solution, data)
    out = _out_path(config, args.solution_out, "solution.json")
    with open(out, "w") as fh:
        fh.write(solution_to_json(solution, gram_hash(gram)))
    _emit({
        "solution_path": out,
        "m": len(data),
        "s": s,
        "s_over_m": s / len(data),
        "margin_value": solution.margin_value,
        "iterations": solution.iterations,
        "support_indices": solution.support_indices.tolist(),
    })
    return EXIT_OK


def cmd_bound(args, extra) -> int:
    inputs = BoundInputs(m=args.m, n=args.n, s=args.s, delta=args.delta)
    f_value = bound_value(inputs)
    rows = breakdown(inputs)
    kl_budget = rows.total()
    _emit({
        "F": f_value,
        "F_exact": bound_exact_zte(kl_budget, args.m, args.s, args.delta),
        "breakdown": [
            {"step": r.step, "ways": r.ways, "contribution": r.contribution}
            for r in rows.rows
        ],
        "vacuous": is_vacuous(f_value),
    })
    return EXIT_OK


def cmd_skeleton_recover(args, extra) -> int:
    weights, net_cfg = load_weights(args.weights)
    pruned = prune_dead_neurons(weights, net_cfg)
    if pruned.zero_function:
        _emit({"zero_function": True})
        return EXIT_OK
    normalized, skel = normalize_to_skeleton(pruned.weights, pruned.config)
    lam = path_products(normalized, pruned.config)
    recovered = recover_weights(lam, skel, pruned.config)
    out_dir = args.out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    skel_path = os.path.join(out_dir, "skeleton.json")
    with open(skel_path, "w") as fh:
        fh.write(skeleton_to_json(skel))
    norm_path = os.path.join(out_dir, "normalized_weights.json")
    save_weights(norm_path, normalized, pruned.config)
    rec_path = os.path.join(out_dir, "recovered_weights.json")
    save_weights(rec_path, recovered, pruned.config)
    max_err = max(
        float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))
        if a.size else 0.0
        for a, b in zip(recovered.matrices, normalized.matrices)
    )
    _emit({
        "zero_function": False,
        "skeleton_path": skel_path,
        "normalized_weights_path": norm_path,
        "recovered_weights_path": rec_path,
        "n_edges": skel.num_edges,
        "max_relative_weight_error": max_err,
    })
    return EXIT_OK


def cmd_sweep(args, extra) -> int:
    config = _load_config(args, extra)
    rows = harness.run_sweep(config)
    out = None
    if config.output_dir:
        out = os.path.join(config.output_dir, "sweep.csv")
    _emit({"rows": len(rows), "sweep_csv": out})
    return EXIT_OK


def cmd_signatures(args, extra) -> int:
    config = _load_config(args, extra)
    data = _build_dataset(config)
    weights, net_cfg = load_weights(args.weights)
    count = harness.count_unique_signatures(weights, net_cfg, data)
    _emit({"m": len(data), "unique_signatures": count})
    return EXIT_OK


def cmd_wbar_check(args, extra) -> int:
    weights, net_cfg = load_weights(args.weights)
    all_positive, minimum = harness.check_wbar_positive(weights, net_cfg)
    _emit({"all_positive": all_positive, "min_coordinate": minimum})
    return EXIT_OK


def cmd_boundary(args, extra) -> int:
    weights, net_cfg = load_weights(args.weights)
    if net_cfg.input_dim != 2:
        raise ValidationError("boundary grids require 2-D inputs")
    if args.classifier == "net":
        clf = harness.network_classifier(weights, net_cfg)
    else:
        if args.config is None or args.solution is None:
            raise ValidationError(
                "--classifier margin needs --config (training data) and --solution")
        config = _load_config(args, extra)
        data = _build_dataset(config)
        with open(args.solution) as fh:
            solution = solution_from_json(fh.read())
        clf = harness.margin_classifier(solution, data, weights, net_cfg)
    grid = harness.boundary_grid(clf, tuple(args.bbox), args.resolution)
    harness.save_grid_csv(grid, args.out)
    _emit({"grid_path": args.out, "resolution": args.resolution})
    return EXIT_OK


def cmd_agree(args, extra) -> int:
    a = np.loadtxt(args.file_a, delimiter=",", ndmin=1)
    b = np.loadtxt(args.file_b, delimiter=",", ndmin=1)
    from .maxmargin import agreement
    _emit({"agreement": agreement(a.ravel(), b.ravel())})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pathmargin")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a network on the configured dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--weights-out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("kernel", help="export the Gram matrix of the dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--gram-out")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("nsv", help="solve the hard margin and report support vectors")
    p.add_argument("--config", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--solution-out")
    p.set_defaults(func=cmd_nsv)

    p = sub.add_parser("bound", help="evaluate the sample-compression risk bound")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--delta", type=float, default=0.05)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("skeleton", help="skeleton operations")
    skel_sub = p.add_subparsers(dest="skeleton_command", required=True)
    pr = skel_sub.add_parser("recover",
                             help="prune, normalize, and round-trip weights "
                                  "through their path products")
    pr.add_argument("--weights", required=True)
    pr.add_argument("--out-dir")
    pr.set_defaults(func=cmd_skeleton_recover)

    p = sub.add_parser("sweep", help="run the configured sweep")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("signatures", help="count unique activation signatures")
    p.add_argument("--config", required=True)
    p.add_argument("--weights", required=True)
    p.set_defaults(func=cmd_signatures)

    p = sub.add_parser("wbar-check", help="check path products for positivity")
    p.add_argument("--weights", required=True)
    p.set_defaults(func=cmd_wbar_check)

    p = sub.add_parser("boundary", help="export a decision grid as CSV")
    p.add_argument("--weights", required=True)
    p.add_argument("--bbox", type=float, nargs=4, required=True,
                   metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    p.add_argument("--resolution", type=int, default=100)
    p.add_argument("--out", required=True)
    p.add_argument("--classifier", choices=("net", "margin"), default="net")
    p.add_argument("--config")
    p.add_argument("--solution")
    p.set_defaults(func=cmd_boundary)

    p = sub.add_parser("agree", help="agreement between two label CSV files")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.set_defaults(func=cmd_agree)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        return args.func(args, extra)
    except GatedRefusalError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_GATED
    except NonSeparableError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NONSEPARABLE
    except BudgetExceededError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValidationError, PathmarginError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
