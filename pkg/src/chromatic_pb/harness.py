"""Dataset ingestion, the bound-versus-test-error sweep and bound-validity runs."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .bounds import auc_linear_bound, iid_bound
from .gibbs import (
    GaussianLinearPosterior,
    LabeledDataset,
    PairSet,
    empirical_auc_risk,
    gibbs_error_auc,
    gibbs_error_binary,
    pointwise_gibbs_loss,
    train_linear,
)

__all__ = [
    "DatasetParseError",
    "RankingSample",
    "SweepConfig",
    "SweepRecord",
    "ValidityConfig",
    "ValidityReport",
    "load_dataset",
    "load_ranking_sample",
    "parse_dataset",
    "write_dataset",
    "build_pairs",
    "run_sweep",
    "run_validity",
    "read_config",
    "sweep_config_from_mapping",
    "validity_config_from_mapping",
    "records_to_csv",
    "records_to_jsonl",
    "records_from_jsonl",
    "make_blobs",
]

log = logging.getLogger(__name__)

DEFAULT_DELTA = 0.01
REFERENCE_PAIRS = 1_000_000


class DatasetParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class RankingSample:
    features: np.ndarray
    scores: np.ndarray


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def _parse_rows(text: str) -> tuple[np.ndarray, np.ndarray, list[int]]:
    rows: list[list[float]] = []
    targets: list[float] = []
    linenos: list[int] = []
    width = None
    header_allowed = True
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        tok = [t.strip() for t in line.split(",")]
        if header_allowed and not _is_number(tok[0]):
            header_allowed = False
            continue
        header_allowed = False
        try:
            vals = [float(t) for t in tok]
        except ValueError:
            raise DatasetParseError(lineno, f"non-numeric field in {line!r}") from None
        if len(vals) < 2:
            raise DatasetParseError(lineno, "need a label and at least one feature")
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise DatasetParseError(lineno, f"expected {width} fields, got {len(vals)}")
        if not all(math.isfinite(v) for v in vals):
            raise DatasetParseError(lineno, "non-finite value")
        targets.append(vals[0])
        rows.append(vals[1:])
        linenos.append(lineno)
    if not rows:
        raise DatasetParseError(0, "no data rows")
    return np.asarray(rows, dtype=float), np.asarray(targets), linenos


def parse_dataset(text: str) -> LabeledDataset:
    X, y, linenos = _parse_rows(text)
    bad = np.flatnonzero((y != 1) & (y != -1))
    if bad.size:
        k = int(bad[0])
        raise DatasetParseError(linenos[k], f"label {y[k]!r} is not -1 or +1")
    return LabeledDataset(X, y)


def load_dataset(path: str | Path) -> LabeledDataset:
    """Read a CSV of ``label, feature_1, ..., feature_d`` rows with ±1 labels."""
    data = parse_dataset(Path(path).read_text())
    log.info("loaded %s: %d examples, %d positive / %d negative", path, data.m, data.n_pos, data.n_neg)
    return data


def load_ranking_sample(path: str | Path) -> RankingSample:
    """Same CSV layout, first column a real-valued target."""
    X, y, _ = _parse_rows(Path(path).read_text())
    return RankingSample(X, y)


def write_dataset(data: LabeledDataset, path: str | Path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label"] + [f"x{k}" for k in range(data.dim)])
    for yi, xi in zip(data.labels, data.features):
        w.writerow([int(yi)] + [repr(float(v)) for v in xi])
    Path(path).write_text(buf.getvalue())


def build_pairs(data: LabeledDataset, cap: int | None = None, seed: int = 0) -> PairSet:
    """All positive-negative pairs, or, when ``l+ * l-`` exceeds ``cap``, the
    pairs of a uniformly drawn subset of observations.

    Whole observations are dropped (never individual pairs) so the pairs
    still form a complete bipartite structure.
    """
    pos = np.flatnonzero(data.labels > 0)
    neg = np.flatnonzero(data.labels < 0)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("pairing needs both classes; dataset has a single class")
    if cap is None or pos.size * neg.size <= cap:
        return PairSet(pos, neg)
    if cap < 1:
        raise ValueError(f"pair cap {cap} must be positive")
    order = np.random.default_rng(seed).permutation(data.m)
    is_pos = data.labels[order] > 0
    n_pos = np.cumsum(is_pos)
    n_neg = np.arange(1, data.m + 1) - n_pos
    fits = (n_pos * n_neg <= cap) & (n_pos > 0) & (n_neg > 0)
    # n_pos * n_neg is nondecreasing along the prefix, so take the last fit.
    ok = np.flatnonzero(fits)
    if ok.size == 0:
        first_pos = order[is_pos][0]
        first_neg = order[~is_pos][0]
        return PairSet([first_pos], [first_neg])
    chosen = order[: ok[-1] + 1]
    return PairSet(np.sort(chosen[data.labels[chosen] > 0]), np.sort(chosen[data.labels[chosen] < 0]))


# --- configuration -----------------------------------------------------------

def read_config(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _floats(value: str) -> list[float]:
    return [float(v) for v in value.replace(";", ",").split(",") if v.strip()]


@dataclass
class SweepConfig:
    train: LabeledDataset | str | Path
    test: LabeledDataset | str | Path
    c_grid: Sequence[float]
    delta: float = DEFAULT_DELTA
    mu_mode: str | float = "norm"
    tie_mode: str = "half"
    seed: int = 0
    output: str | Path | None = None
    epochs: int = 50
    train_pair_cap: int | None = None
    test_pair_cap: int | None = None

    def __post_init__(self) -> None:
        if not len(self.c_grid):
            raise ValueError("C grid is empty")
        if any(c <= 0 for c in self.c_grid):
            raise ValueError("C values must be positive")
        if not 0 < self.delta <= 1:
            raise ValueError(f"delta={self.delta} must lie in (0, 1]")
        if self.mu_mode != "norm":
            self.mu_mode = float(self.mu_mode)
            if self.mu_mode <= 0:
                raise ValueError("fixed mu must be positive")
        if self.tie_mode not in ("half", "strict"):
            raise ValueError(f"unknown tie mode {self.tie_mode!r}")


def sweep_config_from_mapping(cfg: dict[str, str], base: Path | None = None) -> SweepConfig:
    def path(key):
        p = Path(cfg[key])
        return p if p.is_absolute() or base is None else base / p

    def opt_int(key):
        return int(cfg[key]) if key in cfg else None

    return SweepConfig(
        train=path("train"),
        test=path("test"),
        c_grid=_floats(cfg["c_grid"]),
        delta=float(cfg.get("delta", DEFAULT_DELTA)),
        mu_mode=cfg.get("mu_mode", cfg.get("mu", "norm")),
        tie_mode=cfg.get("tie_mode", "half"),
        seed=int(cfg.get("seed", 0)),
        output=cfg.get("output"),
        epochs=int(cfg.get("epochs", 50)),
        train_pair_cap=opt_int("train_pair_cap"),
        test_pair_cap=opt_int("test_pair_cap"),
    )


@dataclass
class SweepRecord:
    c: float
    ehat: float
    bound_kl: float
    bound_pinsker: float
    test_err: float
    lpos: int
    lneg: int
    lmin: int
    mu: float
    best_bound: bool = False
    best_test: bool = False


def _as_dataset(d) -> LabeledDataset:
    return d if isinstance(d, LabeledDataset) else load_dataset(d)


def run_sweep(config: SweepConfig) -> list[SweepRecord]:
    """Train a linear scorer per C and compare the AUC Gibbs bound with the test error."""
    train = _as_dataset(config.train)
    test = _as_dataset(config.test)
    train_pairs = build_pairs(train, config.train_pair_cap, config.seed)
    test_pairs = build_pairs(test, config.test_pair_cap, config.seed + 1)
    records = []
    for c in sorted(config.c_grid):
        lam = 1.0 / (c * train.m)
        scorer = train_linear(train, lam, config.epochs, config.seed)
        norm = float(np.linalg.norm(scorer.weights))
        if norm == 0.0:
            raise ValueError(f"trainer returned a zero weight vector at C={c}")
        mu = norm if config.mu_mode == "norm" else float(config.mu_mode)
        post = GaussianLinearPosterior(scorer.weights / norm, mu)
        ehat = gibbs_error_auc(post, train, train_pairs)
        bound = auc_linear_bound(train_pairs.l_min, mu, config.delta, ehat)
        test_err = empirical_auc_risk(scorer, test, test_pairs, config.tie_mode)
        records.append(
            SweepRecord(
                c=float(c),
                ehat=ehat,
                bound_kl=bound.risk_bound_kl,
                bound_pinsker=bound.risk_bound_pinsker,
                test_err=test_err,
                lpos=train_pairs.l_pos,
                lneg=train_pairs.l_neg,
                lmin=train_pairs.l_min,
                mu=mu,
            )
        )
        log.info("C=%g ehat=%.4f bound=%.4f test=%.4f", c, ehat, bound.risk_bound_kl, test_err)
    min(records, key=lambda r: r.bound_kl).best_bound = True
    min(records, key=lambda r: r.test_err).best_test = True
    if config.output:
        Path(config.output).write_text(records_to_csv(records))
    return records


SWEEP_FIELDS = [f.name for f in fields(SweepRecord)]


def records_to_csv(records: Iterable[SweepRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_FIELDS)
    for r in records:
        w.writerow([repr(v) if isinstance(v, float) else int(v) for v in (getattr(r, k) for k in SWEEP_FIELDS)])
    return buf.getvalue()


def records_to_jsonl(records: Iterable) -> str:
    return "".join(json.dumps(asdict(r), sort_keys=False) + "\n" for r in records)


def records_from_jsonl(text: str) -> list[SweepRecord]:
    return [SweepRecord(**json.loads(line)) for line in text.splitlines() if line.strip()]


def make_blobs(m: int, d: int, separation: float = 3.0, seed: int = 0, prior: float = 0.5) -> LabeledDataset:
    """Two Gaussian classes at ``±separation/sqrt(d)`` per axis; with a large
    separation the classes are linearly separable through the origin."""
    rng = np.random.default_rng(seed)
    y = np.where(rng.random(m) < prior, 1.0, -1.0)
    if not (np.any(y > 0) and np.any(y < 0)):
        y[0], y[-1] = 1.0, -1.0
    centre = separation / math.sqrt(d)
    X = y[:, None] * centre + 0.5 * rng.standard_normal((m, d))
    return LabeledDataset(X, y)


# --- bound validity -----------------------------------------------------------

@dataclass
class ValidityConfig:
    """Repeated-sampling check of the "with probability at least 1 - delta" claim.

    ``mode="auc"`` draws ``l_pos`` positives and ``l_neg`` negatives and uses
    the AUC bound for the Gaussian posterior; ``mode="iid"`` draws ``m``
    labelled points (positive with probability ``prior``) and uses the IID bound.
    """

    mean_pos: Sequence[float]
    mean_neg: Sequence[float]
    sigma: float = 1.0
    prior: float = 0.5
    l_pos: int = 20
    l_neg: int = 20
    m: int = 50
    n_draws: int = 1000
    delta: float = 0.1
    direction: Sequence[float] | None = None
    mu: float = 2.0
    seed: int = 0
    mode: str = "auc"
    reference_size: int = REFERENCE_PAIRS
    workers: int | None = None

    def __post_init__(self) -> None:
        self.mean_pos = np.atleast_1d(np.asarray(self.mean_pos, dtype=float))
        self.mean_neg = np.atleast_1d(np.asarray(self.mean_neg, dtype=float))
        if self.mean_pos.shape != self.mean_neg.shape:
            raise ValueError("class means must have the same dimension")
        if self.n_draws < 100:
            raise ValueError("validity runs need at least 100 draws")
        if not 0 < self.delta <= 1:
            raise ValueError(f"delta={self.delta} must lie in (0, 1]")
        if self.mode not in ("auc", "iid"):
            raise ValueError(f"unknown validity mode {self.mode!r}")
        if self.direction is None:
            self.direction = self.mean_pos - self.mean_neg

    def posterior(self) -> GaussianLinearPosterior:
        return GaussianLinearPosterior(np.asarray(self.direction, dtype=float), self.mu)


def validity_config_from_mapping(cfg: dict[str, str]) -> ValidityConfig:
    kw: dict = {}
    for key in ("mean_pos", "mean_neg", "direction"):
        if key in cfg:
            kw[key] = _floats(cfg[key])
    for key in ("sigma", "prior", "delta", "mu"):
        if key in cfg:
            kw[key] = float(cfg[key])
    for key in ("l_pos", "l_neg", "m", "n_draws", "seed", "reference_size", "workers"):
        if key in cfg:
            kw[key] = int(cfg[key])
    if "l" in cfg:
        l = int(cfg["l"])
        kw.setdefault("l_pos", l // 2)
        kw.setdefault("l_neg", l - l // 2)
    if "mode" in cfg:
        kw["mode"] = cfg["mode"]
    return ValidityConfig(**kw)


@dataclass
class ValidityReport:
    mode: str
    n_draws: int
    violations: int
    violation_rate: float
    delta: float
    tolerance: float
    e_true: float
    e_true_se: float
    mean_ehat: float
    mean_bound: float
    skipped: bool = False
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violation_rate <= self.tolerance


def _draw_class(rng, mean, sigma, n):
    return mean + sigma * rng.standard_normal((n, mean.size))


def _reference_risk(cfg: ValidityConfig, post: GaussianLinearPosterior) -> tuple[float, float]:
    rng = np.random.default_rng([cfg.seed, 0])
    n = cfg.reference_size
    if cfg.mode == "auc":
        # Independent (positive, negative) pairs give an unbiased pair-risk estimate.
        diff = _draw_class(rng, cfg.mean_pos, cfg.sigma, n) - _draw_class(rng, cfg.mean_neg, cfg.sigma, n)
        loss = pointwise_gibbs_loss(post, diff, np.ones(n))
    else:
        y = np.where(rng.random(n) < cfg.prior, 1.0, -1.0)
        X = np.where(y[:, None] > 0, cfg.mean_pos, cfg.mean_neg) + cfg.sigma * rng.standard_normal(
            (n, cfg.mean_pos.size)
        )
        loss = pointwise_gibbs_loss(post, X, y)
    return float(loss.mean()), float(loss.std(ddof=1) / math.sqrt(n))


def _one_draw(cfg: ValidityConfig, post: GaussianLinearPosterior, d: int) -> tuple[float, float]:
    rng = np.random.default_rng([cfg.seed, 1, d])
    if cfg.mode == "auc":
        xp = _draw_class(rng, cfg.mean_pos, cfg.sigma, cfg.l_pos)
        xn = _draw_class(rng, cfg.mean_neg, cfg.sigma, cfg.l_neg)
        data = LabeledDataset(np.vstack([xp, xn]), np.r_[np.ones(cfg.l_pos), -np.ones(cfg.l_neg)])
        pairs = PairSet(np.arange(cfg.l_pos), np.arange(cfg.l_pos, cfg.l_pos + cfg.l_neg))
        ehat = gibbs_error_auc(post, data, pairs)
        bound = auc_bound_for(cfg, post, ehat)
    else:
        y = np.where(rng.random(cfg.m) < cfg.prior, 1.0, -1.0)
        X = np.where(y[:, None] > 0, cfg.mean_pos, cfg.mean_neg) + cfg.sigma * rng.standard_normal(
            (cfg.m, cfg.mean_pos.size)
        )
        ehat = gibbs_error_binary(post, LabeledDataset(X, y))
        bound = iid_bound(cfg.m, post.kl, cfg.delta, ehat)
    return ehat, bound.risk_bound_kl


def auc_bound_for(cfg: ValidityConfig, post: GaussianLinearPosterior, ehat: float):
    return auc_linear_bound(min(cfg.l_pos, cfg.l_neg), post.mu, cfg.delta, ehat)


def run_validity(config: ValidityConfig) -> ValidityReport:
    """Fraction of independent samples whose risk bound falls below the true risk.

    A draw violates the bound iff ``e_true > e_hat + kl^-1(e_hat, budget)``.
    The true risk is estimated once from ``reference_size`` fresh draws.
    """
    n = config.n_draws
    tol = config.delta + 3.0 * math.sqrt(config.delta * (1.0 - config.delta) / n)
    post = config.posterior()
    if config.delta >= 1.0:
        # A confidence of 1 - delta = 0 promises nothing: no draw can violate it.
        return ValidityReport(config.mode, n, 0, 0.0, config.delta, tol, math.nan, math.nan,
                              math.nan, math.nan, skipped=True)
    e_true, e_se = _reference_risk(config, post)
    if config.workers and config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            out = list(pool.map(lambda d: _one_draw(config, post, d), range(n)))
    else:
        out = [_one_draw(config, post, d) for d in range(n)]
    ehat = np.array([o[0] for o in out])
    bound = np.array([o[1] for o in out])
    violations = int(np.count_nonzero(e_true > bound))
    return ValidityReport(
        mode=config.mode,
        n_draws=n,
        violations=violations,
        violation_rate=violations / n,
        delta=config.delta,
        tolerance=tol,
        e_true=e_true,
        e_true_se=e_se,
        mean_ehat=float(ehat.mean()),
        mean_bound=float(bound.mean()),
        details={"min_margin": float((bound - e_true).min())},
    )
