#!/usr/bin/env python3
"""Evaluate the sample-compression risk bound and its breakdown.

F(m, n, s, delta) = (n + ns + s + s ln(m/s) + ln(1/delta)) / (m - s)

Three specification steps contribute additively: choosing which s
samples are support vectors, recording their slope patterns (ns bits),
and picking the classifier among the 2^n compatible with the recovered
products.  The exact zero-error form 1 - exp(-x) is slightly tighter.
"""

import math

import pathmargin as pm
from pathmargin.compression import BoundInputs

inputs = BoundInputs(m=10_000, n=10, s=100, delta=0.05)
f_value = pm.bound_value(inputs)
rows = pm.breakdown(inputs)

print(f"F(m={inputs.m}, n={inputs.n}, s={inputs.s}, delta={inputs.delta}) "
      f"= {f_value:.6f}")
print(f"{'step':<28}{'count':<16}{'contribution':>14}")
for row in rows.rows:
    print(f"{row.step:<28}{row.ways:<16}{row.contribution:>14.3f}")
print(f"{'confidence ln(1/delta)':<28}{'':<16}"
      f"{math.log(1 / inputs.delta):>14.3f}")
print(f"total / (m - s) = {(rows.total() + math.log(1 / inputs.delta)) / (inputs.m - inputs.s):.6f}")

exact = pm.bound_exact_zte(rows.total(), inputs.m, inputs.s, inputs.delta)
print(f"\nexact zero-error form: {exact:.6f}  (compact form {f_value:.6f})")

print("\nhow the bound moves:")
for label, other in [
    ("double m", BoundInputs(20_000, 10, 100, 0.05)),
    ("double n", BoundInputs(10_000, 20, 100, 0.05)),
    ("double s", BoundInputs(10_000, 10, 200, 0.05)),
    ("delta -> 0.5", BoundInputs(10_000, 10, 100, 0.5)),
]:
    print(f"  {label:<14} F = {pm.bound_value(other):.6f}")

big = pm.bound_value(BoundInputs(m=20_000, n=48, s=3000, delta=0.05))
print(f"\nat heavy support usage (m=20000, n=48, s=3000): F = {big:.3f} "
      f"{'(vacuous, reported as-is)' if pm.is_vacuous(big) else ''}")

print(f"\nBernoulli-KL utilities: kl(0.1 || 0.3) = {pm.kl_bernoulli(0.1, 0.3):.6f}")
print(f"kl_inverse(0.1, 0.05) = {pm.kl_inverse(0.1, 0.05):.6f}")
