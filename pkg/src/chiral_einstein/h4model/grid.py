"""Grid numerics for the model operator on the half-space.

Discretization: ``t = log rho`` on ``[log rho_min, log rho_max]`` with Dirichlet
ends, ``y`` on a periodic torus of side ``y_length``, second-order centred
differences everywhere.  In ``t`` the hyperbolic data read

* ``dvol = e^{-3t} dt dy``,
* ``|du|^2 = |u_t|^2 + e^{2t} |grad_y u|^2``,
* ``d*d u = -u_tt + 3 u_t - e^{2t} Lap_y u``,
* ``R u = c e^t curl_y u``.

A weight ``nu`` means the norm ``||rho^-nu u||_{L^2}``.  Writing
``u = e^{(nu + 3/2) t} w`` turns ``d*d + 4 + R`` into

    ``-w'' - 2 nu w' + (25/4 - nu^2) w + e^{2t} K2 w + c e^t S w``

with ``w`` in plain ``L^2(dt dy)``; ``K2`` and ``S`` are diagonal on Fourier
modes in ``y``, so each mode is a tridiagonal problem in ``t``.  The operator is
invertible on this scale when ``|nu| < 5/2`` (indicial roots ``-1`` and ``4``).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal, svdvals

from .normal import R_COEFF_DERIVED, R_COEFF_PRINTED

R_COEFFS = {"printed": float(R_COEFF_PRINTED), "derived": float(R_COEFF_DERIVED), "none": 0.0}


class ConfigError(ValueError):
    pass


@dataclass
class GridConfig:
    rho_min: float = 0.05
    rho_max: float = 20.0
    n_rho: int = 64
    n_y: int = 32
    y_length: float = 2 * np.pi
    weight_nu: float = 0.0
    seed: int = 0
    levels: int = 3
    shift: float = 4.0
    r_coeff: str = "derived"
    samples: int = 200

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.rho_min > 0:
            raise ConfigError("rho_min must be positive")
        if not self.rho_max > self.rho_min:
            raise ConfigError("rho_max must exceed rho_min")
        if self.levels < 1:
            raise ConfigError("levels must be at least 1")
        for name in ("n_rho", "n_y"):
            n = getattr(self, name)
            if n < 4 or n % 2 ** (self.levels - 1):
                raise ConfigError(f"{name} must be >= 4 and divisible by 2^(levels-1)")
        if self.y_length <= 0:
            raise ConfigError("y_length must be positive")
        if self.r_coeff not in R_COEFFS:
            raise ConfigError(f"r_coeff must be one of {sorted(R_COEFFS)}")

    @classmethod
    def from_dict(cls, d: dict) -> "GridConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def from_json(cls, path) -> "GridConfig":
        try:
            d = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e}") from None
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class GridSection:
    """Values ``(3, n_t, n_y, n_y, n_y)`` on interior t-nodes and a periodic y-grid."""

    values: np.ndarray
    t: np.ndarray
    hy: float
    nu: float = 0.0

    def __post_init__(self):
        if self.values.ndim != 5 or self.values.shape[0] != 3 or self.values.shape[1] != len(self.t):
            raise ValueError("values must have shape (3, n_t, n_y, n_y, n_y)")
        if not self.hy > 0 or not self.dt > 0:
            raise ValueError("grid spacings must be positive")

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def rho(self) -> np.ndarray:
        return np.exp(self.t)

    @property
    def h(self) -> float:
        return max(self.dt, self.hy)


def t_grid(rho_min: float, rho_max: float, n: int) -> np.ndarray:
    """n interior nodes; the Dirichlet ends sit one step outside."""
    return np.linspace(np.log(rho_min), np.log(rho_max), n + 2)[1:-1]


# ----------------------------------------------------------------------
# finite differences on sections


def _dt(u, dt):
    p = np.pad(u, [(0, 0), (1, 1)] + [(0, 0)] * (u.ndim - 2))
    return (p[:, 2:] - p[:, :-2]) / (2 * dt)


def _dtt(u, dt):
    p = np.pad(u, [(0, 0), (1, 1)] + [(0, 0)] * (u.ndim - 2))
    return (p[:, 2:] - 2 * u + p[:, :-2]) / dt**2


def _dy(u, j, hy):
    ax = 2 + j
    return (np.roll(u, -1, axis=ax) - np.roll(u, 1, axis=ax)) / (2 * hy)


def _lap_y(u, hy):
    out = -6 * u
    for ax in (2, 3, 4):
        out = out + np.roll(u, 1, axis=ax) + np.roll(u, -1, axis=ax)
    return out / hy**2


def _bcast(t):
    return t[None, :, None, None, None]


def norm2(s: GridSection, v: np.ndarray) -> float:
    w = np.exp((-3 - 2 * s.nu) * s.t)
    return float(np.sum(np.sum(v**2, axis=(0, 2, 3, 4)) * w) * s.dt * s.hy**3)


def curl_y(s: GridSection) -> np.ndarray:
    u = s.values
    d = lambda i, j: _dy(u[i:i + 1], j, s.hy)[0]
    return np.stack([-d(1, 2) + d(2, 1), d(0, 2) - d(2, 0), -d(0, 1) + d(1, 0)])


def r_apply(s: GridSection, coeff: float = float(R_COEFF_PRINTED)) -> np.ndarray:
    return coeff * np.exp(_bcast(s.t)) * curl_y(s)


def du_norm2(s: GridSection) -> float:
    u = s.values
    e2 = np.exp(2 * _bcast(s.t))
    dens = _dt(u, s.dt) ** 2 + e2 * sum(_dy(u, j, s.hy) ** 2 for j in range(3))
    w = np.exp((-3 - 2 * s.nu) * s.t)
    return float(np.sum(np.sum(dens, axis=(0, 2, 3, 4)) * w) * s.dt * s.hy**3)


def laplacian(s: GridSection) -> np.ndarray:
    """Componentwise scalar ``d*d``."""
    u = s.values
    return -_dtt(u, s.dt) + 3 * _dt(u, s.dt) - np.exp(2 * _bcast(s.t)) * _lap_y(u, s.hy)


# ----------------------------------------------------------------------
# random and adversarial sections


def _bump(x, c, r):
    z = np.clip((x - c) / r, -1, 1)
    return (1 - z**2) ** 4


def random_section(rng: np.random.Generator, t: np.ndarray, n_y: int, y_length: float) -> GridSection:
    """Compactly supported in ``t`` and (within one period) in ``y``, random modulation."""
    hy = y_length / n_y
    y = np.arange(n_y) * hy
    span = t[-1] - t[0]
    c = rng.uniform(t[0] + 0.3 * span, t[-1] - 0.3 * span)
    bt = _bump(t, c, rng.uniform(0.15, 0.3) * span)
    vals = np.zeros((3, len(t), n_y, n_y, n_y))
    for i in range(3):
        prof = bt * (rng.normal(size=3) @ np.vstack([np.ones_like(t), np.sin(t), np.cos(2 * t)]))
        fy = []
        for _ in range(3):
            cy = rng.uniform(0.3, 0.7) * y_length
            k = rng.integers(0, 4)
            fy.append(_bump(y, cy, 0.25 * y_length) * np.cos(2 * np.pi * k * y / y_length + rng.uniform(0, 6.3)))
        vals[i] = np.einsum("t,a,b,c->tabc", prof, *fy)
    return GridSection(vals, t, hy)


def oscillating_section(t: np.ndarray, n_y: int, y_length: float, mode: int, t_center: float,
                        t_width: float = 1.5, sign: int = 1) -> GridSection:
    """``b(t) (0, cos k y1, sign * sin k y1)``: an eigenvector of ``curl_y`` with eigenvalue
    ``-sign * sin(k h)/h``."""
    hy = y_length / n_y
    y = np.arange(n_y) * hy
    k = 2 * np.pi * mode / y_length
    bt = _bump(t, t_center, t_width)
    vals = np.zeros((3, len(t), n_y, n_y, n_y))
    vals[1] = bt[:, None, None, None] * np.cos(k * y)[None, :, None, None]
    vals[2] = sign * bt[:, None, None, None] * np.sin(k * y)[None, :, None, None]
    return GridSection(vals, t, hy)


# ----------------------------------------------------------------------
# R bound


@dataclass
class RBoundResult:
    worst_ratio: float
    mean_ratio: float
    n_samples: int
    n_skipped: int
    h: float
    coeff: float
    ratios: list = field(default_factory=list, repr=False)

    @property
    def bound(self) -> float:
        return 0.5 + 3 * self.h**2

    @property
    def holds(self) -> bool:
        return self.worst_ratio <= self.bound


def r_ratio(s: GridSection, coeff: float = float(R_COEFF_PRINTED)) -> float | None:
    den = du_norm2(s)
    if den <= 1e-300:
        return None
    return norm2(s, r_apply(s, coeff)) / den


def r_bound_check(samples: int = 200, seed: int = 0, config: GridConfig | None = None,
                  coeff: float = float(R_COEFF_PRINTED)) -> RBoundResult:
    cfg = config or GridConfig(n_rho=32, n_y=16)
    rng = np.random.default_rng(seed)
    t = t_grid(cfg.rho_min, cfg.rho_max, cfg.n_rho)
    ratios, skipped = [], 0
    for _ in range(samples):
        r = r_ratio(random_section(rng, t, cfg.n_y, cfg.y_length), coeff)
        if r is None:
            skipped += 1
        else:
            ratios.append(r)
    h = max(t[1] - t[0], cfg.y_length / cfg.n_y)
    return RBoundResult(max(ratios), float(np.mean(ratios)), len(ratios), skipped, h, coeff, ratios)


# ----------------------------------------------------------------------
# coercivity


def _modes(n_y: int, y_length: float):
    """Distinct ``(K2, |kappa|)`` over Fourier modes (symmetric under permutations and signs)."""
    hy = y_length / n_y
    m = np.arange(n_y // 2 + 1)
    k = 2 * np.pi * m / y_length
    k2 = (2 - 2 * np.cos(k * hy)) / hy**2
    kap = np.sin(k * hy) / hy
    out = set()
    for a in range(len(m)):
        for b in range(a, len(m)):
            for c in range(b, len(m)):
                out.add((round(k2[a] + k2[b] + k2[c], 12), round(np.sqrt(kap[a]**2 + kap[b]**2 + kap[c]**2), 12)))
    return sorted(out)


def smallest_singular_value(n_t: int, n_y: int, cfg: GridConfig, shift: float | None = None,
                            coeff: float | None = None) -> float:
    shift = cfg.shift if shift is None else shift
    c = R_COEFFS[cfg.r_coeff] if coeff is None else coeff
    nu = cfg.weight_nu
    t = t_grid(cfg.rho_min, cfg.rho_max, n_t)
    dt = t[1] - t[0]
    base = 2 / dt**2 + 9 / 4 - nu**2 + shift
    e1, e2 = np.exp(t), np.exp(2 * t)
    off_lo = -1 / dt**2 + nu / dt  # coefficient of w_{j-1}
    off_hi = -1 / dt**2 - nu / dt  # coefficient of w_{j+1}
    best = np.inf
    for K2, kap in _modes(n_y, cfg.y_length):
        for s in {0.0, kap, -kap}:
            d = base + e2 * K2 + c * e1 * s
            if nu == 0:
                ev = eigvalsh_tridiagonal(d, np.full(n_t - 1, off_hi))
                sv = np.min(np.abs(ev))
            else:
                A = np.diag(d) + np.diag(np.full(n_t - 1, off_hi), 1) + np.diag(np.full(n_t - 1, off_lo), -1)
                sv = svdvals(A)[-1]
            best = min(best, float(sv))
    return best


@dataclass
class CoercivityResult:
    levels: list  # (n_t, n_y, sigma_min)
    control_levels: list
    no_r_levels: list
    box_doubled: float
    config: dict

    @property
    def sigmas(self) -> list[float]:
        return [s for *_, s in self.levels]

    @property
    def variation(self) -> float:
        a, b = self.sigmas[-2:]
        return abs(b - a) / abs(b)

    @property
    def positive(self) -> bool:
        return all(s > 0 for s in self.sigmas)

    @property
    def stabilized(self) -> bool:
        return len(self.levels) >= 2 and self.variation < 0.1

    @property
    def control_ratio(self) -> float:
        return self.control_levels[-1][-1] / self.sigmas[-1]

    @property
    def control_near_kernel(self) -> bool:
        return self.control_ratio < 0.05

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "levels": [{"n_rho": a, "n_y": b, "sigma_min": s} for a, b, s in self.levels],
            "control_levels": [{"n_rho": a, "n_y": b, "sigma_min": s} for a, b, s in self.control_levels],
            "no_r_levels": [{"n_rho": a, "n_y": b, "sigma_min": s} for a, b, s in self.no_r_levels],
            "box_doubled_sigma_min": self.box_doubled,
            "variation_last_two": self.variation,
            "positive": self.positive,
            "stabilized": self.stabilized,
            "control_ratio": self.control_ratio,
            "control_near_kernel": self.control_near_kernel,
        }


def coercivity_probe(cfg: GridConfig | None = None) -> CoercivityResult:
    """Smallest singular value of ``d*d + shift + R`` over ``levels`` refinements,
    with the control ``d*d - shift`` and the R-free operator alongside."""
    cfg = cfg or GridConfig()
    sizes = [(cfg.n_rho // 2 ** (cfg.levels - 1 - l), cfg.n_y // 2 ** (cfg.levels - 1 - l)) for l in range(cfg.levels)]
    levels = [(a, b, smallest_singular_value(a, b, cfg)) for a, b in sizes]
    control = [(a, b, smallest_singular_value(a, b, cfg, shift=-cfg.shift)) for a, b in sizes]
    no_r = [(a, b, smallest_singular_value(a, b, cfg, coeff=0.0)) for a, b in sizes]
    wide = GridConfig(**{**cfg.to_dict(), "rho_min": cfg.rho_min / 2, "rho_max": cfg.rho_max * 2})
    a, b = sizes[-1]
    doubled = smallest_singular_value(a, b, wide)
    return CoercivityResult(levels, control, no_r, doubled, cfg.to_dict())


# ----------------------------------------------------------------------
# inequality chain


@dataclass
class ChainResult:
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs * (1 - 1e-9)


def chain_check(s: GridSection, coeff: float = float(R_COEFF_PRINTED)) -> ChainResult:
    """``(9/4)||D u||^2`` against ``1/2||d*d u||^2 + 3||du||^2 + 16||u||^2`` with
    ``D = (2/3)(d*d + 4 + R)``."""
    lap = laplacian(s)
    Du = lap + 4 * s.values + r_apply(s, coeff)  # (3/2) D u
    lhs = norm2(s, Du)
    rhs = 0.5 * norm2(s, lap) + 3 * du_norm2(s) + 16 * norm2(s, s.values)
    return ChainResult(lhs, rhs)
