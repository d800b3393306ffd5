"""Flow-side background: equilibrium exponents of the Lorenz-type systems,
the exponent inequalities that transfer the multiplier conditions to time-tau
maps, and an explicit geometric-model return map with an expanding quotient
over a contracted foliation.

The quotient map is u' = sign(u) * (-nu + A |u|^rho) with rho in (1/2, 1):
uniformly expanding on its domain, image strictly interior, discontinuous on
the stable-manifold trace {u = 0} where orbits fall onto the saddle and never
return.  The fiber map v' = lam_v * v + c_v * sign(u) contracts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

Array = np.ndarray


@dataclass(frozen=True)
class FlowExponents:
    """Characteristic exponents at the saddle equilibrium, ordered
    ... <= Re a2 <= Re a1 < alpha < 0 < beta."""

    beta: float
    alpha: float
    alpha_strong: tuple

    def __post_init__(self):
        strong = tuple(complex(a) for a in self.alpha_strong)
        object.__setattr__(self, "alpha_strong", strong)
        if not (self.beta > 0 > self.alpha):
            raise ValidationError("exponent ordering violated: need beta > 0 > alpha")
        if any(a.real > self.alpha for a in strong):
            raise ValidationError("exponent ordering violated: Re alpha_i <= alpha")


def equilibrium_exponents(system: str, *params: float) -> FlowExponents:
    """Exponents at the origin of the named three-dimensional model.

    "lorenz" takes (sigma, rho, beta); "morioka_shimizu" takes (alpha, lam).
    In both models the (x, y) block decouples from z at the origin, so the
    exponents are the roots of a quadratic plus the z-eigenvalue.
    """
    if system == "lorenz":
        sigma, rho, beta = params
        # (x, y) block [[-sigma, sigma], [rho, -1]]: s^2 + (sigma+1)s - sigma(rho-1)
        disc = (sigma + 1.0) ** 2 + 4.0 * sigma * (rho - 1.0)
        sq = math.sqrt(disc) if disc >= 0 else complex(0.0, math.sqrt(-disc))
        plus = (-(sigma + 1.0) + sq) / 2.0
        minus = (-(sigma + 1.0) - sq) / 2.0
        z_eig = -beta
    elif system == "morioka_shimizu":
        alpha, lam = params
        # (x, y) block [[0, 1], [1, -lam]]: s^2 + lam*s - 1
        disc = lam * lam + 4.0
        plus = (-lam + math.sqrt(disc)) / 2.0
        minus = (-lam - math.sqrt(disc)) / 2.0
        z_eig = -alpha
    else:
        raise ValidationError(f"unknown system {system!r}")

    eigs = sorted([complex(plus), complex(minus), complex(z_eig)],
                  key=lambda s: -s.real)
    if any(abs(s.real) < 1e-12 for s in eigs):
        raise ValidationError("non-hyperbolic origin: an exponent has zero real part")
    beta_exp = eigs[0]
    if beta_exp.imag != 0.0 or beta_exp.real <= 0.0:
        raise ValidationError("origin is not a saddle with a real positive exponent")
    return FlowExponents(beta=beta_exp.real, alpha=eigs[1].real,
                         alpha_strong=tuple(eigs[2:]))


def check_c3prime(exp: FlowExponents) -> tuple[bool, tuple[float, float]]:
    """The two exponent inequalities Re a1 < 2*alpha and alpha + 2*beta/3 < 0.

    Returns (ok, (strong_margin, area_value)); strong_margin > 0 means the
    first inequality holds, area_value < 0 the second (the raw value of
    alpha + 2*beta/3 is reported, positive when it fails).
    """
    re_a1 = max(a.real for a in exp.alpha_strong)
    strong_margin = 2.0 * exp.alpha - re_a1
    area_value = exp.alpha + 2.0 * exp.beta / 3.0
    return (strong_margin > 0.0 and area_value < 0.0), (strong_margin, area_value)


def exponents_report(exp: FlowExponents) -> dict:
    ok, (strong_margin, area_value) = check_c3prime(exp)
    return {
        "beta": exp.beta,
        "alpha": exp.alpha,
        "alpha_strong": [[a.real, a.imag] for a in exp.alpha_strong],
        "c3prime_ok": ok,
        "strong_margin": strong_margin,
        "area_value": area_value,
    }


# ---------------------------------------------------------------------------
# the geometric return-map model


@dataclass(frozen=True)
class AbsConfig:
    """Return-map model on the cross-section [-half, half]^2.

    u' = sign(u) (-nu + A |u|^rho),  v' = lam_v v + c_v sign(u).
    """

    A: float = 1.9
    rho: float = 0.7
    nu: float = 0.95
    lam_v: float = 0.3
    c_v: float = 0.2
    half_width: float = 1.0

    def __post_init__(self):
        if not (0.5 < self.rho < 1.0):
            raise ValidationError("rho must lie in (1/2, 1)")
        if self.A <= 0.0:
            raise ValidationError("A must be positive")
        # uniform expansion: derivative A*rho*|u|^(rho-1) minimized at the edge
        if self.A * self.rho * self.half_width ** (self.rho - 1.0) <= 1.0:
            raise ValidationError("quotient map not uniformly expanding on the domain")
        umax = max(self.nu, abs(-self.nu + self.A * self.half_width ** self.rho))
        if umax >= self.half_width:
            raise ValidationError("image not strictly inside the domain")
        if self.lam_v * self.half_width + abs(self.c_v) >= self.half_width:
            raise ValidationError("fiber map not trapping")


def abs_quotient_step(config: AbsConfig, u: float) -> float:
    """One step of the expanding quotient map; u = 0 falls onto the saddle."""
    if u == 0.0:
        raise ValidationError("u = 0 lies on the stable-manifold trace; "
                              "the orbit tends to the saddle and never returns")
    return math.copysign(1.0, u) * (-config.nu + config.A * abs(u) ** config.rho)


def abs_expansion_bound(config: AbsConfig, n_grid: int = 1001) -> float:
    """min |du'/du| over a grid of the domain (excluding u = 0)."""
    us = np.linspace(-config.half_width, config.half_width, n_grid)
    us = us[us != 0.0]
    return float(np.min(config.A * config.rho * np.abs(us) ** (config.rho - 1.0)))


@dataclass
class AbsOrbit:
    steps: Array       # (n, 2) of (u, v)
    symbols: list      # sign(u) per step
    terminated: bool   # hit u = 0 exactly (absorbed by the saddle)


def simulate_poincare(config: AbsConfig, u0: float, v0: float, n: int) -> AbsOrbit:
    """n-step orbit of the skew product; terminates if it lands on u = 0."""
    pts = [(u0, v0)]
    symbols = []
    u, v = u0, v0
    terminated = False
    for _ in range(n):
        if u == 0.0:
            terminated = True
            break
        symbols.append(1 if u > 0 else -1)
        u_new = abs_quotient_step(config, u)
        v = config.lam_v * v + config.c_v * math.copysign(1.0, u)
        u = u_new
        pts.append((u, v))
    return AbsOrbit(np.array(pts), symbols, terminated)


def orbit_csv(orbit: AbsOrbit) -> str:
    lines = ["step,u,v,symbol"]
    for i, (u, v) in enumerate(orbit.steps):
        sym = orbit.symbols[i] if i < len(orbit.symbols) else ""
        lines.append(f"{i},{u:.17g},{v:.17g},{sym}")
    return "\n".join(lines) + "\n"
