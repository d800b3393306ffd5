"""Flow-side background: equilibrium exponents of the Lorenz and
Morioka-Shimizu systems, the exponent inequalities, and orbits of the
geometric return-map model.

Run:  python demos/05_lorenz_flows.py
"""

import numpy as np

from hetdim import (AbsConfig, abs_quotient_step, check_c3prime,
                    equilibrium_exponents, simulate_poincare)
from hetdim.flows import abs_expansion_bound

print("== equilibrium exponents ==")
lorenz = equilibrium_exponents("lorenz", 10.0, 28.0, 8.0 / 3.0)
print(f"Lorenz (10, 28, 8/3): beta = {lorenz.beta:.6f}, alpha = {lorenz.alpha:.6f}, "
      f"alpha_1 = {lorenz.alpha_strong[0].real:.6f}")
ok, (strong, area) = check_c3prime(lorenz)
print(f"  exponent inequalities: {'hold' if ok else 'FAIL'} "
      f"(alpha + 2 beta / 3 = {area:+.4f})")

ms = equilibrium_exponents("morioka_shimizu", 0.5, 1.0)
print(f"Morioka-Shimizu (0.5, 1.0): beta = {ms.beta:.6f}, alpha = {ms.alpha:.6f}, "
      f"alpha_1 = {ms.alpha_strong[0].real:.6f}")
ok, (strong, area) = check_c3prime(ms)
print(f"  exponent inequalities: {'hold' if ok else 'FAIL'} "
      f"(alpha + 2 beta / 3 = {area:+.4f})")

print("\n== geometric return-map model ==")
cfg = AbsConfig()
print(f"quotient map u' = sign(u)(-{cfg.nu} + {cfg.A} |u|^{cfg.rho})")
print(f"uniform expansion bound: {abs_expansion_bound(cfg):.4f} > 1")
print(f"one-sided limits at the discontinuity: {abs_quotient_step(cfg, 1e-300):+.2f} / "
      f"{abs_quotient_step(cfg, -1e-300):+.2f}")

orb = simulate_poincare(cfg, 0.37, -0.11, 24)
symbols = "".join("+" if s > 0 else "-" for s in orb.symbols)
print(f"a sample itinerary: {symbols}")
rng = np.random.default_rng(1)
worst = 0.0
for _ in range(5000):
    u0, v0 = rng.uniform(-1, 1, 2)
    worst = max(worst, float(np.max(np.abs(simulate_poincare(cfg, u0, v0, 50).steps))))
print(f"trapping: max |coordinate| over 5000 random orbits = {worst:.6f} < 1")
