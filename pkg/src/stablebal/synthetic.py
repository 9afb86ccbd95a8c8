"""Seeded generators for shifted binary environments.

Three dependence regimes between stable (S) and noisy (V) feature blocks,
two outcome models over the stable block, and two biased-selection
mechanisms that tilt the sample toward agreement between designated noisy
columns and either the outcome or a stable-feature summary.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .dataset import BinaryDataset, DatasetError, EnvironmentSuite, StableSplit

__all__ = [
    "GenSpec",
    "GenerationError",
    "gen_features",
    "gen_outcome",
    "bias_select_yv",
    "bias_select_vs",
    "make_suite",
    "DEFAULT_BIAS_COLUMNS",
]

SETTINGS = ("S_indep_V", "S_to_V", "V_to_S")
OUTCOME_MODES = ("A", "B")
BIAS_MODES = ("Y_given_V", "V_given_S")

#: how many designated noisy columns participate in the selection rule
DEFAULT_BIAS_COLUMNS = 3

#: candidate cap before rejection sampling gives up
MAX_CANDIDATES = 10_000_000


class GenerationError(RuntimeError):
    """Rejection sampling failed to produce enough accepted rows."""


@dataclass(frozen=True)
class GenSpec:
    """Parameters of one synthetic environment family."""

    setting: str = "S_indep_V"
    n: int = 2000
    p: int = 20
    r: float = 0.85
    outcome_mode: str = "A"
    bias_mode: str = "Y_given_V"
    seed: int = 0
    bias_columns: int = DEFAULT_BIAS_COLUMNS

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise DatasetError(f"setting must be one of {SETTINGS}")
        if self.outcome_mode not in OUTCOME_MODES:
            raise DatasetError(f"outcome_mode must be one of {OUTCOME_MODES}")
        if self.bias_mode not in BIAS_MODES:
            raise DatasetError(f"bias_mode must be one of {BIAS_MODES}")
        if not 0 < self.r < 1:
            raise DatasetError("bias rate r must be in (0, 1)")
        if self.p < 5:
            raise DatasetError("p must be at least 5")
        if self.n < 1:
            raise DatasetError("n must be positive")
        if self.p_s < 2:
            raise DatasetError("need at least 2 stable features (p_s = round(0.4 p))")
        if not 1 <= self.bias_columns <= self.p_v:
            raise DatasetError("bias_columns must fit in the noisy block")

    @property
    def p_s(self) -> int:
        return int(round(0.4 * self.p))

    @property
    def p_v(self) -> int:
        return self.p - self.p_s

    @property
    def split(self) -> StableSplit:
        return StableSplit(tuple(range(self.p_s)), tuple(range(self.p_s, self.p)))

    def to_dict(self) -> dict:
        return {
            "setting": self.setting, "n": self.n, "p": self.p, "r": self.r,
            "outcome_mode": self.outcome_mode, "bias_mode": self.bias_mode,
            "seed": self.seed, "bias_columns": self.bias_columns,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GenSpec":
        return cls(**d)


def _derived_seed(seed: int, label: str) -> int:
    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def gen_features(spec: GenSpec, rng=None, n_rows: int | None = None):
    """Draw a pre-selection binary feature pool; returns (features, split).

    Columns are ordered stable block first.  Dependent blocks mix each source
    column with its cyclic successor plus Gaussian noise of variance 2.
    """
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    n = spec.n if n_rows is None else n_rows
    p_s, p_v = spec.p_s, spec.p_v
    if spec.setting == "S_indep_V":
        latent = rng.normal(0.0, 1.0, size=(n, spec.p))
        X = (latent >= 0.0).astype(np.int8)
    elif spec.setting == "S_to_V":
        s_latent = rng.normal(0.0, 1.0, size=(n, p_s))
        S = (s_latent >= 0.0).astype(np.int8)
        noise = rng.normal(0.0, np.sqrt(2.0), size=(n, p_v))
        idx = np.arange(p_v)
        v_latent = s_latent[:, idx % p_s] + s_latent[:, (idx + 1) % p_s] + noise
        V = (v_latent > 1.0).astype(np.int8)
        X = np.concatenate([S, V], axis=1)
    else:  # V_to_S
        v_latent = rng.normal(0.0, 1.0, size=(n, p_v))
        V = (v_latent >= 0.0).astype(np.int8)
        noise = rng.normal(0.0, np.sqrt(2.0), size=(n, p_s))
        idx = np.arange(p_s)
        s_latent = v_latent[:, idx % p_v] + v_latent[:, (idx + 1) % p_v] + noise
        S = (s_latent > 1.0).astype(np.int8)
        X = np.concatenate([S, V], axis=1)
    return X, spec.split


def _outcome_coefficients(spec: GenSpec):
    """Linear coefficients over the first half of the stable block and the
    interaction coefficient; 1-based index convention."""
    p_s = spec.p_s
    n_lin = -(-p_s // 2)
    if spec.outcome_mode == "A":
        alphas = np.array(
            [(-1.0) ** i * (i % 3 + 1) * spec.p / 3.0 for i in range(1, n_lin + 1)]
        )
    else:
        alphas = np.array([(-1.0) ** i for i in range(1, n_lin + 1)])
    return alphas, spec.p / 2.0, n_lin


def gen_outcome(X, split: StableSplit, spec: GenSpec, rng=None) -> np.ndarray:
    """Binary outcome from the stable block: linear part over the first half,
    pairwise interactions (cyclic within the second half), sigmoid link,
    additive Gaussian noise in mode A, thresholded at 0.5 (ties to 1)."""
    if len(split.stable_idx) < 2:
        raise DatasetError("outcome model requires at least 2 stable features")
    rng = np.random.default_rng(_derived_seed(spec.seed, "outcome")) if rng is None else rng
    X = np.asarray(X, dtype=float)
    S = X[:, split.stable_idx]
    alphas, beta_j, n_lin = _outcome_coefficients(spec)
    score = S[:, :n_lin] @ alphas
    nonlin = S[:, n_lin:]
    k = nonlin.shape[1]
    if k > 0:
        idx = np.arange(k)
        score = score + beta_j * np.sum(nonlin[:, idx] * nonlin[:, (idx + 1) % k], axis=1)
    y_cont = 1.0 / (1.0 + np.exp(-score))
    if spec.outcome_mode == "A":
        y_cont = y_cont + rng.normal(0.0, np.sqrt(0.2), size=X.shape[0])
    return (y_cont >= 0.5).astype(np.int8)


def _accept_mask(match: np.ndarray, r: float, rng) -> np.ndarray:
    """Acceptance coin: keep with probability r when every designated column
    matches its target, with probability 1 - r otherwise."""
    prob = np.where(match.all(axis=1), r, 1.0 - r)
    return rng.random(match.shape[0]) < prob


def _rejection_sample(pool_X, pool_y, match_fn, r, n, rng):
    """Sample pool rows with replacement, accept per the bias coin."""
    pool_X = np.asarray(pool_X)
    pool_y = np.asarray(pool_y)
    kept_rows = []
    kept_y = []
    kept = 0
    drawn = 0
    batch = max(4 * n, 1024)
    while kept < n:
        if drawn >= MAX_CANDIDATES:
            raise GenerationError(
                f"rejection sampling starved: {kept}/{n} rows after {drawn} candidates"
            )
        idx = rng.integers(0, pool_X.shape[0], size=batch)
        drawn += batch
        accept = _accept_mask(match_fn(pool_X[idx], pool_y[idx]), r, rng)
        kept_rows.append(pool_X[idx][accept])
        kept_y.append(pool_y[idx][accept])
        kept += int(accept.sum())
    X = np.concatenate(kept_rows)[:n]
    y = np.concatenate(kept_y)[:n]
    return X, y


def bias_select_yv(pool: BinaryDataset, split: StableSplit, r: float, n: int,
                   seed: int = 0, bias_columns: int = DEFAULT_BIAS_COLUMNS) -> BinaryDataset:
    """Outcome-linked selection: keep a row with probability r when every
    designated noisy column equals the outcome, with probability 1 - r
    otherwise."""
    if not 0 < r < 1:
        raise DatasetError("bias rate r must be in (0, 1)")
    cols = split.noisy_idx[:bias_columns]
    rng = np.random.default_rng(seed)

    def match(X, y):
        return X[:, cols] == y[:, None]

    X, y = _rejection_sample(pool.features, pool.outcome, match, r, n, rng)
    return BinaryDataset(X, y, pool.feature_names)


def stable_summary(X, split: StableSplit, bias_columns: int = DEFAULT_BIAS_COLUMNS) -> np.ndarray:
    """Binary mediator per designated noisy column: alternating-sign sum of six
    consecutive stable columns (cyclic, 1-based signs), thresholded at 0."""
    X = np.asarray(X, dtype=float)
    S = X[:, split.stable_idx]
    p_s = S.shape[1]
    out = np.empty((X.shape[0], bias_columns), dtype=np.int8)
    for i in range(1, bias_columns + 1):
        z = np.zeros(X.shape[0])
        for j in range(i, i + 6):
            z += (-1.0) ** j * S[:, (j - 1) % p_s]
        out[:, i - 1] = (z > 0.0).astype(np.int8)
    return out


def bias_select_vs(pool: BinaryDataset, split: StableSplit, r: float, n: int,
                   seed: int = 0, bias_columns: int = DEFAULT_BIAS_COLUMNS) -> BinaryDataset:
    """Mediator-linked selection: keep a row with probability r when every
    designated noisy column equals its stable-feature mediator, with
    probability 1 - r otherwise."""
    if not 0 < r < 1:
        raise DatasetError("bias rate r must be in (0, 1)")
    cols = split.noisy_idx[:bias_columns]
    rng = np.random.default_rng(seed)

    def match(X, y):
        Z = stable_summary(X, split, bias_columns)
        return X[:, cols] == Z

    X, y = _rejection_sample(pool.features, pool.outcome, match, r, n, rng)
    return BinaryDataset(X, y, pool.feature_names)


def _feature_names(spec: GenSpec) -> tuple[str, ...]:
    return tuple(
        [f"s{j + 1}" for j in range(spec.p_s)] + [f"v{j + 1}" for j in range(spec.p_v)]
    )


def generate_environment(spec: GenSpec, label: str, r: float) -> BinaryDataset:
    """One selected environment at bias rate r from a fresh seeded pool."""
    env_seed = _derived_seed(spec.seed, label)
    rng = np.random.default_rng(env_seed)
    pool_n = max(8 * spec.n, 4096)
    X, split = gen_features(spec, rng, n_rows=pool_n)
    y = gen_outcome(X, split, spec, rng)
    pool = BinaryDataset(X, y, _feature_names(spec))
    selector = bias_select_yv if spec.bias_mode == "Y_given_V" else bias_select_vs
    return selector(pool, split, r, spec.n,
                    seed=_derived_seed(env_seed, "select"),
                    bias_columns=spec.bias_columns)


def make_suite(spec: GenSpec, test_rates) -> EnvironmentSuite:
    """Train environment at spec.r plus one test environment per rate, each
    from an independent seeded pool sharing the same outcome law."""
    test_rates = list(test_rates)
    train = generate_environment(spec, "train", spec.r)
    tests = []
    for i, rate in enumerate(test_rates):
        label = f"r={rate:g}"
        tests.append((label, generate_environment(spec, f"test{i}", rate)))
    provenance = dict(spec.to_dict())
    provenance["test_rates"] = test_rates
    provenance["env_seeds"] = {
        "train": _derived_seed(spec.seed, "train"),
        **{f"test{i}": _derived_seed(spec.seed, f"test{i}") for i in range(len(test_rates))},
    }
    return EnvironmentSuite(train, tuple(tests), provenance)
