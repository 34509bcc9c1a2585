"""Parameter sweeps over ``(alpha, eps)`` and their records."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .dirac import (
    DiracOperator,
    SpinStructure,
    TRIVIAL_SPIN,
    first_positive_weighted_eigenvalue,
    kernel_dimension,
)
from .errors import ConfigurationError, ConvergenceError
from .geometry import CutoffProfile, bump_factor, check_parameter_chain, generalized_volume, make_grid
from .laplace import LaplaceOperator, first_weighted_eigenvalue
from .witness import witness_report

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "alpha", "epsilon", "mu1", "lambda1", "volume", "mu1_vol", "lambda1sq_vol", "ratio",
    "witness_bound", "I1", "I2", "denominator", "kernel_dim", "residual_mu", "residual_lambda",
)


@dataclass(frozen=True)
class SweepConfig:
    period: float = 1.0
    nodes_per_axis: int = 128
    delta: float = 1 / 8
    alphas: tuple[float, ...] = (1 / 16, 1 / 32)
    epsilon_ratios: tuple[float, ...] = (1 / 2, 1 / 4, 1 / 8, 1 / 16)
    spin: SpinStructure = TRIVIAL_SPIN
    laplace_tol: float = 1e-10
    dirac_tol: float = 1e-10
    kernel_tol: float = 1e-8
    cutoff_order: int = 5
    workers: int = 1
    seed: int = 0
    output_dir: str = "results"
    formats: tuple[str, ...] = ("csv", "json", "gnuplot")
    figures: bool = True

    def pairs(self) -> list[tuple[float, float]]:
        """``(alpha, eps)`` pairs in output order: alpha ascending, eps descending."""
        out = [(a, a * r) for a in self.alphas for r in self.epsilon_ratios]
        return sorted(out, key=lambda p: (p[0], -p[1]))

    def validate(self) -> "SweepConfig":
        make_grid(self.period, self.nodes_per_axis)
        if not self.alphas or not self.epsilon_ratios:
            raise ConfigurationError("alphas and epsilon_ratios must be nonempty")
        for a, e in self.pairs():
            check_parameter_chain(self.period, a, e, self.delta)
        for name in ("laplace_tol", "dirac_tol", "kernel_tol"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        bad = set(self.formats) - {"csv", "json", "gnuplot"}
        if bad:
            raise ConfigurationError(f"unknown output formats {sorted(bad)}")
        return self

    def echo(self) -> dict[str, Any]:
        d = asdict(self)
        d["spin"] = str(self.spin)
        return d


@dataclass
class SweepRecord:
    alpha: float
    epsilon: float
    mu1: float = float("nan")
    lambda1: float = float("nan")
    volume: float = float("nan")
    mu1_vol: float = float("nan")
    lambda1sq_vol: float = float("nan")
    ratio: float = float("nan")
    witness_bound: float = float("nan")
    I1: float = float("nan")
    I2: float = float("nan")
    denominator: float = float("nan")
    kernel_dim: int = -1
    residual_mu: float = float("nan")
    residual_lambda: float = float("nan")
    wall_time: float = field(default=0.0, compare=False)
    status: str = "ok"
    message: str = ""
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def csv_row(self) -> list:
        return [getattr(self, c) for c in CSV_COLUMNS]

    @classmethod
    def from_dict(cls, d: dict) -> "SweepRecord":
        names = {f.name for f in fields(cls)}
        kw = {k: (float("nan") if v is None else v) for k, v in d.items() if k in names}
        return cls(**kw)


def _parse_number(text: str) -> float:
    return float(Fraction(text.strip()))


def _parse_list(text: str) -> tuple[float, ...]:
    return tuple(_parse_number(t) for t in text.split(",") if t.strip())


_PARSERS = {
    "period": _parse_number,
    "nodes_per_axis": int,
    "delta": _parse_number,
    "alphas": _parse_list,
    "epsilon_ratios": _parse_list,
    "spin": SpinStructure.parse,
    "laplace_tol": float,
    "dirac_tol": float,
    "kernel_tol": float,
    "cutoff_order": int,
    "workers": int,
    "seed": int,
    "output_dir": str,
    "formats": lambda s: tuple(t.strip() for t in s.split(",") if t.strip()),
    "figures": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
}
_ALIASES = {"n": "nodes_per_axis", "L": "period", "ratios": "epsilon_ratios", "out": "output_dir"}


def parse_overrides(pairs: dict[str, str]) -> dict[str, Any]:
    out = {}
    for key, raw in pairs.items():
        key = _ALIASES.get(key, key)
        if key not in _PARSERS:
            raise ConfigurationError(f"unknown config key {key!r}")
        try:
            out[key] = _PARSERS[key](raw)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigurationError(f"bad value for {key}: {raw!r} ({exc})") from exc
    return out


def read_config_file(path: str | Path) -> dict[str, str]:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    entries = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        entries[key] = value
    return entries


def load_config(path: Optional[str | Path] = None, **overrides: Any) -> SweepConfig:
    """Defaults, then the file, then already-typed ``overrides`` (flags win)."""
    values: dict[str, Any] = {}
    if path is not None:
        values.update(parse_overrides(read_config_file(path)))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return replace(SweepConfig(), **values).validate()


def compute_record(config: SweepConfig, alpha: float, epsilon: float) -> SweepRecord:
    """One ``(alpha, eps)`` experiment; solver failures are captured in the record."""
    t0 = time.perf_counter()
    rec = SweepRecord(alpha=alpha, epsilon=epsilon)
    try:
        grid = make_grid(config.period, config.nodes_per_axis)
        factor = bump_factor(grid, alpha, epsilon)
        rec.volume = generalized_volume(factor, grid)
        lap = first_weighted_eigenvalue(LaplaceOperator(grid), factor, config.laplace_tol, seed=config.seed)
        rec.mu1, rec.residual_mu = lap.eigenvalue, lap.residual
        dop = DiracOperator(grid, config.spin)
        dr = first_positive_weighted_eigenvalue(
            dop, factor, config.dirac_tol, kernel_tol=config.kernel_tol, seed=config.seed
        )
        rec.lambda1, rec.residual_lambda = dr.eigenvalue, dr.residual
        rec.kernel_dim = kernel_dimension(dop, config.kernel_tol, factor, seed=config.seed)
        rec.mu1_vol = rec.mu1 * rec.volume
        rec.lambda1sq_vol = rec.lambda1**2 * rec.volume
        rec.ratio = rec.lambda1sq_vol / rec.mu1_vol
        wr = witness_report(grid, CutoffProfile(config.delta, config.cutoff_order), factor, epsilon, config.spin)
        rec.I1, rec.I2, rec.denominator = wr.I1, wr.I2, wr.denominator
        rec.witness_bound = wr.upper_bound
        rec.diagnostics = {
            "laplace_iterations": lap.iterations,
            "dirac_iterations": dr.iterations,
            "witness_split_bound": wr.split_bound,
            "h1_norm": lap.diagnostics["h1_norm"],
        }
    except ConvergenceError as exc:
        rec.status, rec.message = "nonconvergence", str(exc)
    except Exception as exc:  # noqa: BLE001 - a failed pair must not abort the sweep
        rec.status, rec.message = "failed", f"{type(exc).__name__}: {exc}"
    rec.wall_time = time.perf_counter() - t0
    if not rec.ok:
        log.warning("alpha=%g eps=%g %s: %s", alpha, epsilon, rec.status, rec.message)
    return rec


def _compute_pair(args):
    return compute_record(*args)


def run_sweep(config: SweepConfig) -> list[SweepRecord]:
    config.validate()
    jobs = [(config, a, e) for a, e in config.pairs()]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_compute_pair, jobs))
    else:
        records = [_compute_pair(j) for j in jobs]
    return sorted(records, key=lambda r: (r.alpha, -r.epsilon))


def records_equal(a: SweepRecord, b: SweepRecord) -> bool:
    """Bitwise equality of the delimited columns (NaN equals NaN)."""
    for c in CSV_COLUMNS:
        x, y = getattr(a, c), getattr(b, c)
        if isinstance(x, float) and np.isnan(x) and np.isnan(y):
            continue
        if x != y:
            return False
    return True
