"""Monte Carlo harness for strong laws of empirical depth trimmed regions.

Every replication owns two Philox streams derived from ``(seed, replication)``:
lane 0 draws the points, lane 1 the weights. A replication draws its largest
sample once and evaluates the schedule on prefixes, so each record is a point
on one trajectory. Replications are independent, which makes the output
identical for any worker count and any execution order.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from .asymptotics import envelope, lambda_n, lil_constant
from .distributions import PLANAR, check_alpha, get_distribution
from .empirical import EXACT_CAP, WeightedSample, emp_region, grid_error_bound
from .geometry import ConvexRegion, contains, hausdorff_distance

EXPERIMENTS = ("slln", "mz", "inclusion", "lil")
MODES = ("exact", "grid", "auto")
INCLUSION_TOL = 1e-9
#: chord error allowance of polygonal model regions in the sandwich check
SANDWICH_TOL = 1e-5
#: decay of n^((p-1)/p) rho_H is only asserted when the net exponent
#: (p-1)/p - 1/2 is at most -0.1, i.e. p <= 5/3
MZ_DECAY_P_MAX = 5.0 / 3.0


# weight laws ------------------------------------------------------------------


@dataclass(frozen=True)
class WeightLaw:
    """Unit-mean i.i.d. weights with second moment ``M``."""

    tag: str
    M: float

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.tag == "const1":
            return np.ones(n)
        if self.tag == "exp1":
            return rng.exponential(1.0, n)
        if self.tag == "pois1":
            return rng.poisson(1.0, n).astype(float)
        if self.tag == "bern02":
            return 2.0 * (rng.random(n) < 0.5)
        raise KeyError(self.tag)


WEIGHT_LAWS = {
    "const1": WeightLaw("const1", 1.0),
    "exp1": WeightLaw("exp1", 2.0),
    "pois1": WeightLaw("pois1", 2.0),
    "bern02": WeightLaw("bern02", 2.0),
}


def weight_law(tag: str) -> WeightLaw:
    try:
        return WEIGHT_LAWS[tag.lower()]
    except KeyError:
        raise KeyError(f"unknown weight law {tag!r}; choose from {', '.join(WEIGHT_LAWS)}") from None


# configuration ----------------------------------------------------------------


def geometric_schedule(n_min: int, n_max: int, per_decade: int = 4) -> tuple[int, ...]:
    """Sample sizes ``n_min * 10**(k / per_decade)`` up to ``n_max``, rounded."""
    if n_min < 3 or n_max < n_min:
        raise ValueError("need 3 <= n_min <= n_max")
    k_max = int(math.floor(per_decade * math.log10(n_max / n_min) + 1e-9))
    ns = [int(round(n_min * 10 ** (k / per_decade))) for k in range(k_max + 1)]
    return tuple(sorted(set(ns)))


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "slln"
    distribution: str = "square"
    alpha: float = 0.25
    weights: str = "const1"
    n_min: int = 100
    n_max: int = 10_000
    per_decade: int = 4
    schedule: tuple[int, ...] | None = None
    replications: int = 10
    seed: int = 20240601
    gamma_mults: tuple[float, ...] = (0.5, 1.5)
    p: float = 1.5
    mode: str = "auto"
    grid_size: int = 2048
    resolution: int = 1024
    workers: int = 1
    record_timing: bool = False
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.distribution not in PLANAR:
            raise ValueError(f"experiments need a planar law, got {self.distribution!r}")
        check_alpha(self.alpha)
        weight_law(self.weights)
        if not 1.0 <= self.p < 2.0:
            raise ValueError(f"p must lie in [1, 2), got {self.p}")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.grid_size < 8 or self.grid_size % 2:
            raise ValueError("grid_size must be an even number >= 8")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")
        if self.schedule is not None:
            sched = tuple(int(n) for n in self.schedule)
            if any(b <= a for a, b in zip(sched, sched[1:])) or not sched or sched[0] < 3:
                raise ValueError("schedule must be strictly increasing with n >= 3")
            object.__setattr__(self, "schedule", sched)
        object.__setattr__(self, "gamma_mults", tuple(float(g) for g in self.gamma_mults))

    @property
    def ns(self) -> tuple[int, ...]:
        if self.schedule is not None:
            return self.schedule
        return geometric_schedule(self.n_min, self.n_max, self.per_decade)

    @property
    def law(self) -> WeightLaw:
        return weight_law(self.weights)

    @property
    def sigma(self) -> float:
        """``sqrt(M alpha - alpha^2)``, the unit of the gamma multipliers."""
        return envelope(self.law.M, self.alpha)

    @property
    def gammas(self) -> tuple[float, ...]:
        return tuple(g * self.sigma for g in self.gamma_mults)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        d = dict(d)
        for key in ("schedule", "gamma_mults"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return cls(**d)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key in ("schedule", "gamma_mults"):
            if out[key] is not None:
                out[key] = list(out[key])
        return out

    def replace(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return ExperimentConfig.from_dict({**self.to_dict(), **kw})

    def output_path(self, template: str | None = None) -> Path:
        tmpl = template or self.out or "results/{experiment}/{dist}/{alpha}/records.{format}"
        return Path(
            tmpl.format(experiment=self.experiment, dist=self.distribution, alpha=self.alpha, format=self.format)
        )


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a mapping")
    return ExperimentConfig.from_dict(data)


# records ----------------------------------------------------------------------


@dataclass(frozen=True)
class TrajectoryRecord:
    replication: int
    n: int
    hausdorff: float | None
    lambda_n: float
    lil_stat: float | None
    running_max: float | None
    mz_stat: float | None
    gammas: tuple[float, ...] = ()
    lower_ok: tuple[bool, ...] = ()
    upper_ok: tuple[bool, ...] = ()
    coherent: tuple[bool, ...] = ()
    mode: str = "exact"
    grid_bound: float | None = None
    empty: bool = False
    wall_time: float = 0.0


FIELDS = tuple(f.name for f in dataclasses.fields(TrajectoryRecord))
_TUPLE_FIELDS = {"gammas": float, "lower_ok": bool, "upper_ok": bool, "coherent": bool}
_OPTIONAL_FLOATS = ("hausdorff", "lil_stat", "running_max", "mz_stat", "grid_bound")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ";".join(_fmt(x) for x in v)
    return str(v)


def record_to_dict(r: TrajectoryRecord) -> dict:
    d = dataclasses.asdict(r)
    for k in _TUPLE_FIELDS:
        d[k] = list(d[k])
    return d


def record_from_dict(d: dict) -> TrajectoryRecord:
    kw = dict(d)
    for k, typ in _TUPLE_FIELDS.items():
        kw[k] = tuple(typ(x) for x in kw.get(k, ()))
    return TrajectoryRecord(**kw)


def _parse_csv_row(row: dict) -> TrajectoryRecord:
    kw: dict = {}
    for name in FIELDS:
        raw = row[name]
        if name in _TUPLE_FIELDS:
            typ = _TUPLE_FIELDS[name]
            parts = [p for p in raw.split(";") if p != ""]
            kw[name] = tuple(float(p) if typ is float else p == "1" for p in parts)
        elif name in ("replication", "n"):
            kw[name] = int(raw)
        elif name in _OPTIONAL_FLOATS:
            kw[name] = None if raw == "" else float(raw)
        elif name == "empty":
            kw[name] = raw == "1"
        elif name == "mode":
            kw[name] = raw
        else:
            kw[name] = float(raw)
    return TrajectoryRecord(**kw)


def dumps_records(records: Sequence[TrajectoryRecord], format: str = "csv") -> str:
    if format == "json":
        return json.dumps([record_to_dict(r) for r in records], indent=1) + "\n"
    if format != "csv":
        raise ValueError(f"unknown format {format!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELDS)
    for r in records:
        w.writerow([_fmt(getattr(r, f)) for f in FIELDS])
    return buf.getvalue()


def loads_records(text: str, format: str = "csv") -> list[TrajectoryRecord]:
    if format == "json":
        return [record_from_dict(d) for d in json.loads(text)]
    return [_parse_csv_row(row) for row in csv.DictReader(io.StringIO(text))]


def persist(records: Sequence[TrajectoryRecord], path, format: str = "csv") -> Path:
    """Write records as CSV (one row per record) or a JSON array; byte-stable."""
    path = Path(path)
    text = dumps_records(records, format)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write records to {path}: {exc}") from exc
    return path


def load_records(path, format: str | None = None) -> list[TrajectoryRecord]:
    path = Path(path)
    fmt = format or ("json" if path.suffix == ".json" else "csv")
    return loads_records(path.read_text(encoding="utf-8"), fmt)


# one replication --------------------------------------------------------------


def replication_streams(seed: int, rep: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Point and weight generators of replication ``rep``."""

    def lane(k: int) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(rep, k))))

    return lane(0), lane(1)


@lru_cache(maxsize=4096)
def _model_region(tag: str, level: float, resolution: int) -> ConvexRegion:
    return get_distribution(tag).region(level, resolution)


def _resolved_mode(cfg: ExperimentConfig, n: int) -> str:
    if cfg.mode == "auto":
        return "exact" if n <= EXACT_CAP else "grid"
    return cfg.mode


def _inclusion(cfg: ExperimentConfig, emp: ConvexRegion, lam: float, gamma: float, dist_emp: float | None):
    """(lower_ok, upper_ok, coherent) for one gamma.

    Lower: every vertex of ``R(alpha + gamma lambda_n)`` lies in the empirical
    region. Upper: every empirical vertex has model depth at least
    ``alpha - gamma lambda_n``, which tests membership in the exact convex set.
    """
    d = get_distribution(cfg.distribution)
    hi_level = cfg.alpha + gamma * lam
    lo_level = cfg.alpha - gamma * lam
    if hi_level >= 0.5:
        lower_ok = True  # at most the centre of symmetry
        inner = None
    else:
        inner = _model_region(cfg.distribution, hi_level, cfg.resolution)
        lower_ok = (not emp.is_empty) and bool(np.all(contains(emp, inner.vertices, tol=INCLUSION_TOL)))
    if lo_level <= 0 or emp.is_empty:
        upper_ok = True
        outer = None
    else:
        upper_ok = bool(np.all(d.depth(emp.vertices) >= lo_level - INCLUSION_TOL))
        outer = _model_region(cfg.distribution, lo_level, cfg.resolution)
    coherent = True
    if lower_ok and upper_ok and inner is not None and outer is not None and dist_emp is not None:
        coherent = dist_emp <= hausdorff_distance(outer, inner) + SANDWICH_TOL
    return lower_ok, upper_ok, coherent


def run_replication(cfg: ExperimentConfig, rep: int) -> list[TrajectoryRecord]:
    d = get_distribution(cfg.distribution)
    ns = cfg.ns
    prng, wrng = replication_streams(cfg.seed, rep)
    pts = d.sample(ns[-1], prng)
    wts = cfg.law.sample(ns[-1], wrng)
    full = WeightedSample(pts, wts)
    model = _model_region(cfg.distribution, cfg.alpha, cfg.resolution)
    expo = (cfg.p - 1.0) / cfg.p
    gammas = cfg.gammas if cfg.experiment == "inclusion" else ()
    out = []
    run_max = None
    for n in ns:
        t0 = time.perf_counter()
        s = full.prefix(n)
        mode = _resolved_mode(cfg, n)
        emp = emp_region(s, cfg.alpha, mode=mode, grid_size=cfg.grid_size)
        lam = lambda_n(n)
        if emp.is_empty:
            dist = lil = mz = None
        else:
            dist = hausdorff_distance(emp, model)
            lil = dist / lam
            mz = n**expo * dist
            run_max = lil if run_max is None else max(run_max, lil)
        flags = [_inclusion(cfg, emp, lam, g, dist) for g in gammas]
        out.append(
            TrajectoryRecord(
                replication=rep,
                n=n,
                hausdorff=dist,
                lambda_n=lam,
                lil_stat=lil,
                running_max=run_max,
                mz_stat=mz,
                gammas=tuple(gammas),
                lower_ok=tuple(f[0] for f in flags),
                upper_ok=tuple(f[1] for f in flags),
                coherent=tuple(f[2] for f in flags),
                mode=mode,
                grid_bound=grid_error_bound(s, emp, cfg.grid_size) if mode == "grid" and not emp.is_empty else None,
                empty=emp.is_empty,
                wall_time=round(time.perf_counter() - t0, 6) if cfg.record_timing else 0.0,
            )
        )
    return out


def _worker(args) -> list[TrajectoryRecord]:
    cfg_dict, rep = args
    return run_replication(ExperimentConfig.from_dict(cfg_dict), rep)


def run_records(cfg: ExperimentConfig, replications: Sequence[int] | None = None) -> list[TrajectoryRecord]:
    """All records, ordered by replication and then by ``n``."""
    reps = list(range(cfg.replications)) if replications is None else list(replications)
    workers = max(1, min(cfg.workers, len(reps)))
    if workers == 1:
        chunks = [run_replication(cfg, r) for r in reps]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_worker, [(cfg.to_dict(), r) for r in reps]))
    by_rep = dict(zip(reps, chunks))
    return [rec for r in sorted(by_rep) for rec in by_rep[r]]


# experiments ------------------------------------------------------------------


def _median(values) -> float | None:
    vals = [v for v in values if v is not None]
    return statistics.median(vals) if vals else None


def medians_by_n(records: Sequence[TrajectoryRecord], attr: str) -> dict[int, float | None]:
    ns = sorted({r.n for r in records})
    return {n: _median(getattr(r, attr) for r in records if r.n == n) for n in ns}


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    records: list[TrajectoryRecord]
    summary: dict = field(default_factory=dict)


def _base_summary(cfg: ExperimentConfig, records) -> dict:
    return {
        "experiment": cfg.experiment,
        "distribution": cfg.distribution,
        "alpha": cfg.alpha,
        "weights": cfg.weights,
        "M": cfg.law.M,
        "replications": cfg.replications,
        "schedule": list(cfg.ns),
        "empty_count": sum(r.empty for r in records),
        "modes": sorted({r.mode for r in records}),
    }


def run_slln(cfg: ExperimentConfig) -> ExperimentResult:
    cfg = cfg.replace(experiment="slln")
    recs = run_records(cfg)
    summary = _base_summary(cfg, recs)
    summary["median_hausdorff"] = medians_by_n(recs, "hausdorff")
    return ExperimentResult(cfg, recs, summary)


def run_mz(cfg: ExperimentConfig) -> ExperimentResult:
    cfg = cfg.replace(experiment="mz")
    recs = run_records(cfg)
    summary = _base_summary(cfg, recs)
    summary["p"] = cfg.p
    summary["median_mz_stat"] = medians_by_n(recs, "mz_stat")
    summary["decay_asserted"] = cfg.p <= MZ_DECAY_P_MAX
    if not summary["decay_asserted"]:
        summary["note"] = "no decay guarantee asserted"
    return ExperimentResult(cfg, recs, summary)


def tail_ns(ns: Sequence[int]) -> tuple[int, ...]:
    """The upper half of a schedule (the larger half when its length is odd)."""
    ns = sorted(ns)
    return tuple(ns[len(ns) // 2 :])


def inclusion_summary(cfg: ExperimentConfig, records: Sequence[TrajectoryRecord]) -> dict:
    tail = set(tail_ns(cfg.ns))
    per_gamma = []
    for j, (mult, g) in enumerate(zip(cfg.gamma_mults, cfg.gammas)):
        tail_recs = [r for r in records if r.n in tail]
        fails = [not (r.lower_ok[j] and r.upper_ok[j]) for r in tail_recs]
        reps_with_failure = {r.replication for r in records if not (r.lower_ok[j] and r.upper_ok[j])}
        per_gamma.append(
            {
                "gamma_mult": mult,
                "gamma": g,
                "tail_failure_rate": sum(fails) / len(fails) if fails else 0.0,
                "lower_failure_rate": sum(not r.lower_ok[j] for r in tail_recs) / max(len(tail_recs), 1),
                "upper_failure_rate": sum(not r.upper_ok[j] for r in tail_recs) / max(len(tail_recs), 1),
                "replications_with_failure": len(reps_with_failure) / cfg.replications,
                "incoherent": sum(not r.coherent[j] for r in records),
            }
        )
    return {"tail": sorted(tail), "per_gamma": per_gamma}


def run_inclusion(cfg: ExperimentConfig) -> ExperimentResult:
    cfg = cfg.replace(experiment="inclusion")
    recs = run_records(cfg)
    summary = _base_summary(cfg, recs)
    summary.update(inclusion_summary(cfg, recs))
    return ExperimentResult(cfg, recs, summary)


def final_running_max(records: Sequence[TrajectoryRecord]) -> dict[int, float | None]:
    out: dict[int, float | None] = {}
    for r in records:
        out[r.replication] = r.running_max  # records are ordered by n within a replication
    return out


def run_lil_metric(cfg: ExperimentConfig) -> ExperimentResult:
    cfg = cfg.replace(experiment="lil")
    recs = run_records(cfg)
    summary = _base_summary(cfg, recs)
    const = lil_constant(get_distribution(cfg.distribution), cfg.alpha, cfg.law.M)
    finals = final_running_max(recs)
    med = _median(finals.values())
    ref = const.value if const.is_exact else const.lower
    summary["lil_constant"] = const.to_dict()
    summary["final_running_max"] = {str(k): v for k, v in finals.items()}
    summary["median_final_running_max"] = med
    summary["ratio_to_constant"] = None if med is None else med / ref
    return ExperimentResult(cfg, recs, summary)


RUNNERS = {"slln": run_slln, "mz": run_mz, "inclusion": run_inclusion, "lil": run_lil_metric}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    return RUNNERS[cfg.experiment](cfg)


def save_result(result: ExperimentResult, path=None) -> tuple[Path, Path]:
    """Persist records and a JSON summary next to them."""
    cfg = result.config
    path = Path(path) if path is not None else cfg.output_path()
    rec_path = persist(result.records, path, cfg.format)
    summ_path = rec_path.with_name(rec_path.stem + ".summary.json")
    payload = {"config": cfg.to_dict(), "summary": result.summary}
    summ_path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return rec_path, summ_path


def default_workers() -> int:
    return max(1, (os.cpu_count() or 1))
