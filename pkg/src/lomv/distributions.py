"""Beta-exposure distributions: moments, cdf, sampling, and the tail functional G.

For a distribution F of factor exposures, define for y >= 0

    G(y) = integral over x <= y of x*(x - y) dF(x).

G is continuous and concave on [0, inf); its unique non-negative zero (when
one exists) pins down the limiting fraction of assets that stay active in
the long-only minimum variance portfolio as the universe grows.  Four kinds
are supported: normal (closed form), discrete and empirical (exact finite
sums), and uniform (adaptive quadrature).

Sampling algorithms are part of the reproducibility contract (per release):
discrete, uniform and empirical kinds use inverse-cdf transforms of
``Generator.random``; the normal kind uses ``Generator.normal``.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr

QUADRATURE_ABS_TOL = 1e-10
#: Lower integration cutoff: mean minus this many scale units.
TRUNCATION_SCALES = 12.0

_MASS_SUM_TOL = 1e-12

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class BetaDistribution:
    """Common interface of the supported exposure distributions."""

    kind: str = ""
    g_method: str = ""

    def mean(self) -> float:
        raise NotImplementedError

    def second_moment(self) -> float:
        raise NotImplementedError

    def cdf(self, x: float) -> float:
        raise NotImplementedError

    def mass_at(self, x: float) -> float:
        raise NotImplementedError

    def cdf_left(self, x: float) -> float:
        """F(x-) = P(X < x)."""
        return self.cdf(x) - self.mass_at(x)

    def prob_negative(self) -> float:
        """P(X < 0)."""
        return self.cdf_left(0.0)

    def neg_second_moment(self) -> float:
        """E[X^2; X <= 0] (restricted, not conditional)."""
        raise NotImplementedError

    def support_left(self) -> float:
        raise NotImplementedError

    def negate(self) -> "BetaDistribution":
        """Distribution of -X."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def g(self, y: float) -> float:
        """The tail functional G(y), y >= 0."""
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class NormalDistribution(BetaDistribution):
    """Normal exposures with mean mu and standard deviation s."""

    mu: float
    s: float

    kind = "normal"
    g_method = "closed-form-normal"

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.s) and self.s > 0):
            raise ValueError("normal kind needs finite mu and s > 0")

    def mean(self):
        return self.mu

    def second_moment(self):
        return self.mu * self.mu + self.s * self.s

    def cdf(self, x):
        return float(ndtr((x - self.mu) / self.s))

    def mass_at(self, x):
        return 0.0

    def pdf(self, x):
        z = (x - self.mu) / self.s
        return math.exp(-0.5 * z * z) / (self.s * _SQRT_2PI)

    def neg_second_moment(self):
        z0 = -self.mu / self.s
        phi0 = math.exp(-0.5 * z0 * z0) / _SQRT_2PI
        return float(
            (self.mu * self.mu + self.s * self.s) * ndtr(z0) - self.s * self.mu * phi0
        )

    def support_left(self):
        return -math.inf

    def negate(self):
        return NormalDistribution(-self.mu, self.s)

    def sample(self, rng, size):
        return rng.normal(self.mu, self.s, size)

    def g(self, y):
        # E[X^2; X<=y] - y*E[X; X<=y] in terms of the standard normal
        # pdf/cdf collapses to (mu^2 + s^2 - mu*y)*Phi(z) - mu*s*phi(z).
        z = (y - self.mu) / self.s
        phi = math.exp(-0.5 * z * z) / _SQRT_2PI
        return float(
            (self.mu * self.mu + self.s * self.s - self.mu * y) * ndtr(z)
            - self.mu * self.s * phi
        )

    def to_json(self):
        return {"kind": "normal", "mu": self.mu, "s": self.s}


@dataclass(frozen=True)
class DiscreteDistribution(BetaDistribution):
    """Finitely many atoms, masses positive and summing to one."""

    atoms: tuple

    kind = "discrete"
    g_method = "closed-form-discrete"

    def __post_init__(self):
        merged = {}
        for loc, mass in self.atoms:
            loc = float(loc)
            mass = float(mass)
            if not (math.isfinite(loc) and math.isfinite(mass)):
                raise ValueError("atom locations and masses must be finite")
            if mass <= 0:
                raise ValueError(f"atom mass must be positive, got {mass}")
            merged[loc] = merged.get(loc, 0.0) + mass
        if not merged:
            raise ValueError("discrete kind needs at least one atom")
        locations = np.array(sorted(merged), dtype=float)
        masses = np.array([merged[loc] for loc in sorted(merged)], dtype=float)
        if abs(math.fsum(masses) - 1.0) > _MASS_SUM_TOL:
            raise ValueError("atom masses must sum to one")
        locations.setflags(write=False)
        masses.setflags(write=False)
        object.__setattr__(self, "atoms", tuple(zip(locations.tolist(), masses.tolist())))
        object.__setattr__(self, "_locations", locations)
        object.__setattr__(self, "_masses", masses)
        cumulative = np.cumsum(masses)
        cumulative[-1] = 1.0
        cumulative.setflags(write=False)
        object.__setattr__(self, "_cumulative", cumulative)

    @property
    def locations(self) -> np.ndarray:
        return self._locations

    @property
    def masses(self) -> np.ndarray:
        return self._masses

    def mean(self):
        return math.fsum(m * b for b, m in zip(self._locations, self._masses))

    def second_moment(self):
        return math.fsum(m * b * b for b, m in zip(self._locations, self._masses))

    def cdf(self, x):
        hi = int(np.searchsorted(self._locations, x, side="right"))
        return math.fsum(self._masses[:hi])

    def mass_at(self, x):
        idx = np.nonzero(self._locations == x)[0]
        return float(self._masses[idx[0]]) if idx.size else 0.0

    def neg_second_moment(self):
        return math.fsum(
            m * b * b for b, m in zip(self._locations, self._masses) if b <= 0
        )

    def support_left(self):
        return float(self._locations[0])

    def negate(self):
        return DiscreteDistribution(
            tuple((-b, m) for b, m in reversed(self.atoms))
        )

    def sample(self, rng, size):
        u = rng.random(size)
        idx = np.searchsorted(self._cumulative, u, side="right")
        return self._locations[idx]

    def g(self, y):
        return math.fsum(
            m * b * (b - y)
            for b, m in zip(self._locations, self._masses)
            if b <= y
        )

    def to_json(self):
        return {"kind": "discrete", "atoms": [[b, m] for b, m in self.atoms]}


@dataclass(frozen=True)
class UniformDistribution(BetaDistribution):
    """Uniform exposures on [a, b]."""

    a: float
    b: float

    kind = "uniform"
    g_method = "quadrature"

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise ValueError("uniform kind needs finite a < b")

    def mean(self):
        return 0.5 * (self.a + self.b)

    def second_moment(self):
        return (self.a * self.a + self.a * self.b + self.b * self.b) / 3.0

    def cdf(self, x):
        if x <= self.a:
            return 0.0
        if x >= self.b:
            return 1.0
        return (x - self.a) / (self.b - self.a)

    def mass_at(self, x):
        return 0.0

    def pdf(self, x):
        return 1.0 / (self.b - self.a) if self.a <= x <= self.b else 0.0

    def neg_second_moment(self):
        top = min(0.0, self.b)
        if self.a >= top:
            return 0.0
        return (top**3 - self.a**3) / (3.0 * (self.b - self.a))

    def support_left(self):
        return self.a

    def negate(self):
        return UniformDistribution(-self.b, -self.a)

    def sample(self, rng, size):
        return self.a + (self.b - self.a) * rng.random(size)

    def g(self, y):
        return g_quadrature(self, y)

    def scale(self) -> float:
        return (self.b - self.a) / math.sqrt(12.0)

    def to_json(self):
        return {"kind": "uniform", "a": self.a, "b": self.b}


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution(BetaDistribution):
    """The empirical measure of an observed sample (equal mass per point)."""

    samples: np.ndarray

    kind = "empirical"
    g_method = "closed-form-discrete"

    def __post_init__(self):
        samples = np.sort(np.asarray(self.samples, dtype=float).ravel())
        if samples.size == 0:
            raise ValueError("empirical kind needs at least one sample")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_csv(cls, path) -> "EmpiricalDistribution":
        values = []
        with open(path, newline="", encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                text = line.strip()
                if not text or (line_no == 1 and text.lower() == "beta"):
                    continue
                try:
                    values.append(float(text))
                except ValueError as exc:
                    raise ValueError(f"row {line_no}: not a number: {text!r}") from exc
        return cls(np.array(values))

    @property
    def n(self) -> int:
        return self.samples.size

    def mean(self):
        return float(self.samples.mean())

    def second_moment(self):
        return float(np.mean(self.samples * self.samples))

    def cdf(self, x):
        return float(np.searchsorted(self.samples, x, side="right")) / self.n

    def mass_at(self, x):
        lo = np.searchsorted(self.samples, x, side="left")
        hi = np.searchsorted(self.samples, x, side="right")
        return float(hi - lo) / self.n

    def neg_second_moment(self):
        kept = self.samples[self.samples <= 0.0]
        return float(np.sum(kept * kept)) / self.n

    def support_left(self):
        return float(self.samples[0])

    def negate(self):
        return EmpiricalDistribution(-self.samples)

    def sample(self, rng, size):
        idx = np.minimum((rng.random(size) * self.n).astype(np.intp), self.n - 1)
        return self.samples[idx]

    def g(self, y):
        kept = self.samples[self.samples <= y]
        return float(np.sum(kept * (kept - y))) / self.n

    def to_json(self):
        return {"kind": "empirical", "samples": self.samples.tolist()}


def g_quadrature(dist, y: float) -> float:
    """Adaptive-quadrature evaluation of G for absolutely continuous kinds.

    Integrates x*(x - y)*pdf(x) on (T, y] with the lower cutoff T at
    ``TRUNCATION_SCALES`` scale units below the mean (clipped to the support
    when it is bounded); the discarded tail is controlled by the negative-tail
    second moment.
    """

    if isinstance(dist, NormalDistribution):
        scale = dist.s
    elif isinstance(dist, UniformDistribution):
        scale = dist.scale()
    else:
        raise TypeError(f"no quadrature density for kind {dist.kind!r}")
    lo = max(dist.support_left(), dist.mean() - TRUNCATION_SCALES * scale)
    if y <= lo:
        return 0.0
    value, _ = quad(
        lambda x: x * (x - y) * dist.pdf(x),
        lo,
        y,
        epsabs=QUADRATURE_ABS_TOL,
        limit=200,
    )
    return float(value)


def dist_from_json(spec, base_dir=None) -> BetaDistribution:
    """Build a distribution from its JSON object (or a path to one).

    Accepted forms:
      {"kind": "normal", "mu": 1.0, "s": 0.4}
      {"kind": "discrete", "atoms": [[-1, 0.05], [1, 0.15], [2, 0.30], [5, 0.50]]}
      {"kind": "uniform", "a": 0.5, "b": 1.5}
      {"kind": "empirical", "path": "betas.csv"}   (or "samples": [...])

    An empirical "path" is resolved against ``base_dir`` when given.
    """

    if isinstance(spec, (str, Path)):
        path = Path(spec)
        with open(path, encoding="utf-8") as handle:
            return dist_from_json(json.load(handle), base_dir=path.parent)
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError("distribution spec must be an object with a 'kind' field")
    kind = spec["kind"]
    try:
        if kind == "normal":
            return NormalDistribution(float(spec["mu"]), float(spec["s"]))
        if kind == "discrete":
            return DiscreteDistribution(tuple((b, m) for b, m in spec["atoms"]))
        if kind == "uniform":
            return UniformDistribution(float(spec["a"]), float(spec["b"]))
        if kind == "empirical":
            if "samples" in spec:
                return EmpiricalDistribution(np.asarray(spec["samples"], dtype=float))
            path = Path(spec["path"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            return EmpiricalDistribution.from_csv(path)
    except KeyError as exc:
        raise ValueError(f"distribution spec missing field {exc}") from exc
    raise ValueError(f"unknown distribution kind {kind!r}")
