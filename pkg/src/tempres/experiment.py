"""Sweeps over (budget, step-size) and their tabular output.

A sweep is described by a JSON manifest; see :class:`SweepConfig` for the
keys.  Records come back in budget-major, step-size-minor order whatever
the number of workers, and a failing record carries its error message in the
``error`` column instead of stopping the run.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .closed_form import mse_for_plan
from .errors import ConfigError, IoFailure, TempresError
from .ground_truth import value_finite, value_infinite
from .monte_carlo import empirical_mse
from .oracle import mse_exact
from .system import HorizonMode, ScalarSystem, VectorSystem, build_plan, validate_scalar, validate_vector

__all__ = [
    "SweepConfig",
    "SweepRecord",
    "CSV_HEADER",
    "sample_stable_matrix",
    "build_system",
    "run_sweep",
    "emit",
    "parse_records",
    "write_records",
]

EVALUATORS = ("closed", "oracle", "empirical")


def sample_stable_matrix(n: int, seed: int) -> np.ndarray:
    """Random symmetric stable matrix ``A = L' diag(lam) L`` with Haar-orthogonal ``L``.

    ``lam_1`` is uniform on ``[-1.5, -1)``, ``lam_2 = -1`` and ``lam_3`` is
    uniform on ``(-1, -0.75]``.  Further eigenvalues (``n > 3``) are uniform on
    ``[-1.5, -0.75]``; for ``n = 2`` the spectrum is ``(lam_1, -1)`` and for
    ``n = 1`` it is ``(-1,)``.
    """
    n = int(n)
    if n < 1:
        raise ConfigError(f"dimension must be positive, got {n}")
    rng = np.random.default_rng(int(seed))
    lam1 = rng.uniform(-1.5, -1.0)
    lam3 = -0.75 - 0.25 * rng.uniform()  # (-1, -0.75]
    extra = rng.uniform(-1.5, -0.75, size=max(0, n - 3))
    lam = np.concatenate([[lam1, -1.0, lam3], extra])[:n] if n >= 2 else np.array([-1.0])
    # Haar orthogonal matrix: QR of a Gaussian matrix with R's diagonal made positive
    Z = rng.standard_normal((n, n))
    L, R = np.linalg.qr(Z)
    L = L * np.sign(np.diag(R))
    A = L.T @ np.diag(lam) @ L
    return 0.5 * (A + A.T)


# ---------------------------------------------------------------------------
# configuration


@dataclass
class SweepConfig:
    """Sweep manifest.

    ``system`` is one of::

        {"kind": "scalar", "a": -1.0, "sigma": 1.0, "q": 1.0}
        {"kind": "matrix", "A": [[...]], "sigma": 1.0, "Q": [[...]]}     # Q defaults to I
        {"kind": "random", "n": 3, "seed": 0, "sigma": 1.0}

    ``T`` is a number, ``"1/(1-gamma)"``, or ``"log:c"`` for
    ``T = c log(B) / log(1/gamma)`` (set per budget).  Step-sizes come from
    ``h`` (explicit list), ``m`` (list of ``T/h``) or ``m_max`` (all
    ``m = 1..m_max``), in that order of precedence.
    """

    system: dict = field(default_factory=lambda: {"kind": "scalar", "a": -1.0, "sigma": 1.0, "q": 1.0})
    mode: str = "finite-undiscounted"
    T: float | str = 8.0
    gamma: float | None = None
    budgets: list = field(default_factory=lambda: [2**12, 2**13, 2**14, 2**15, 2**16])
    h: list | None = None
    m: list | None = field(default_factory=lambda: [4, 8, 16, 32, 64, 128])
    m_max: int | None = None
    replicates: int = 50
    seed: int = 0
    evaluators: list = field(default_factory=lambda: ["closed", "oracle", "empirical"])
    output: str | None = None
    format: str = "csv"
    workers: int | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        data = dict(data)
        if "m" not in data and ("h" in data or "m_max" in data):
            data["m"] = None  # the default m list must not shadow an explicit source
        cfg = cls(**data)
        cfg.check()
        return cfg

    @classmethod
    def from_file(cls, path: str) -> "SweepConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise IoFailure(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def with_overrides(self, **overrides) -> "SweepConfig":
        cfg = replace(self, **{k: v for k, v in overrides.items() if v is not None})
        cfg.check()
        return cfg

    def check(self) -> None:
        self.mode = HorizonMode.parse(self.mode).value
        if int(self.replicates) < 1:
            raise ConfigError(f"replicates must be at least 1, got {self.replicates}")
        bad = set(self.evaluators) - set(EVALUATORS)
        if bad:
            raise ConfigError(f"unknown evaluators {sorted(bad)}; choose from {EVALUATORS}")
        if self.format not in ("csv", "jsonl"):
            raise ConfigError(f"format must be csv or jsonl, got {self.format!r}")
        if not self.budgets or any(int(B) != B or B < 1 for B in self.budgets):
            raise ConfigError("budgets must be a non-empty list of positive integers")
        if self.gamma is None:
            if self.mode != HorizonMode.FINITE_UNDISCOUNTED.value:
                raise ConfigError(f"{self.mode} needs gamma")
        build_system(self)  # validates the system block

    def gamma_value(self) -> float:
        return 1.0 if self.gamma is None else float(self.gamma)

    def horizon(self, B: int) -> float:
        T = self.T
        if isinstance(T, (int, float)):
            return float(T)
        g = self.gamma_value()
        if T == "1/(1-gamma)":
            if g >= 1:
                raise ConfigError("T = 1/(1-gamma) needs gamma < 1")
            return 1.0 / (1.0 - g)
        if isinstance(T, str) and T.startswith("log:"):
            if g >= 1:
                raise ConfigError("logarithmic horizon needs gamma < 1")
            return float(T[4:]) * math.log(B) / math.log(1.0 / g)
        raise ConfigError(f"cannot interpret horizon {T!r}")

    def step_sizes(self, T: float) -> list[float]:
        if self.h is not None:
            return [float(h) for h in self.h]
        if self.m is not None:
            return [T / int(m) for m in self.m]
        if self.m_max is not None:
            return [T / m for m in range(1, int(self.m_max) + 1)]
        raise ConfigError("config gives no step-sizes (h, m or m_max)")


def build_system(cfg: SweepConfig) -> ScalarSystem | VectorSystem:
    spec = dict(cfg.system)
    kind = spec.pop("kind", "scalar")
    gamma = cfg.gamma
    try:
        if kind == "scalar":
            return validate_scalar(spec["a"], spec.get("sigma", 1.0), spec.get("q", 1.0), cfg.mode, gamma)
        if kind == "matrix":
            A = np.asarray(spec["A"], dtype=float)
            Q = spec.get("Q")
            return validate_vector(A, spec.get("sigma", 1.0), np.eye(A.shape[0]) if Q is None else Q, cfg.mode, gamma)
        if kind == "random":
            A = sample_stable_matrix(spec.get("n", 3), spec.get("seed", 0))
            return validate_vector(A, spec.get("sigma", 1.0), np.eye(A.shape[0]), cfg.mode, gamma)
    except KeyError as exc:
        raise ConfigError(f"system block is missing {exc}") from None
    raise ConfigError(f"unknown system kind {kind!r}")


# ---------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class SweepRecord:
    mode: str
    n: int
    a_or_eigs: str
    sigma: float
    gamma: float
    T: float
    h: float
    N: int | None
    B: int
    M: int | None
    seed: int
    replicates: int
    V_target: float | None = None
    mse_closed: float | None = None
    mse_oracle: float | None = None
    mse_emp_mean: float | None = None
    mse_emp_se: float | None = None
    bias_sq: float | None = None
    variance_over_M: float | None = None
    truncation_sq: float | None = None
    cross_term: float | None = None
    error: str = ""


CSV_HEADER = tuple(f.name for f in fields(SweepRecord))
_INT_FIELDS = {"n", "N", "B", "M", "seed", "replicates"}
_STR_FIELDS = {"mode", "a_or_eigs", "error"}


def _describe(sys) -> str:
    if isinstance(sys, ScalarSystem):
        return format(sys.a, ".17g")
    eig = np.sort_complex(np.asarray(sys.eigenvalues, dtype=complex))
    parts = [format(e.real, ".17g") if e.imag == 0 else format(complex(e)) for e in eig]
    return ";".join(parts)


def _one_record(sys, cfg: SweepConfig, B: int, T: float, h: float, target: float | None, target_err: str) -> SweepRecord:
    mode = HorizonMode.parse(cfg.mode)
    base = dict(
        mode=mode.value,
        n=sys.n,
        a_or_eigs=_describe(sys),
        sigma=float(sys.sigma),
        gamma=cfg.gamma_value(),
        T=T,
        h=h,
        N=None,
        B=int(B),
        M=None,
        seed=int(cfg.seed),
        replicates=int(cfg.replicates),
        V_target=target,
    )
    try:
        if target is None:
            raise ConfigError(target_err)
        plan = build_plan(h, B, T, cfg.gamma_value(), mode)
        base.update(h=plan.h, N=plan.N, M=plan.M)
        if "closed" in cfg.evaluators and isinstance(sys, ScalarSystem):
            base["mse_closed"] = mse_for_plan(sys, plan)
        if "oracle" in cfg.evaluators:
            br = mse_exact(sys, plan)
            base.update(mse_oracle=br.total, **{k: v for k, v in br.as_dict().items() if k != "total"})
        if "empirical" in cfg.evaluators:
            emp = empirical_mse(sys, plan, target, cfg.replicates, cfg.seed, workers=1)
            base.update(mse_emp_mean=emp.mean, mse_emp_se=emp.std_error)
    except (TempresError, ValueError, ArithmeticError) as exc:
        base["error"] = f"{type(exc).__name__}: {exc}"
    return SweepRecord(**base)


def _target(sys, cfg: SweepConfig, T: float) -> float:
    mode = HorizonMode.parse(cfg.mode)
    if mode.is_finite:
        return value_finite(sys, T, cfg.gamma_value()).value
    return value_infinite(sys, cfg.gamma_value()).value


def run_sweep(cfg: SweepConfig) -> list[SweepRecord]:
    """Evaluate every (budget, step-size) pair of ``cfg``."""
    sys = build_system(cfg)
    targets: dict[float, tuple[float | None, str]] = {}
    tasks = []
    for B in cfg.budgets:
        T = cfg.horizon(int(B))
        if T not in targets:
            try:
                targets[T] = (_target(sys, cfg, T), "")
            except (TempresError, ValueError, ArithmeticError) as exc:
                targets[T] = (None, f"target value unavailable: {exc}")
        for h in cfg.step_sizes(T):
            tasks.append((int(B), T, h))
    workers = cfg.workers
    if workers is None:
        raw = os.environ.get("TEMPRES_WORKERS", "").strip()
        workers = int(raw) if raw else 1

    def run(task):
        B, T, h = task
        return _one_record(sys, cfg, B, T, h, *targets[T])

    if workers <= 1:
        return [run(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, tasks))


# ---------------------------------------------------------------------------
# serialisation


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r} cannot be written")
        return format(value, ".17g")
    return str(value)


def emit(records, fmt: str = "csv") -> str:
    """Render records as CSV (fixed header) or JSON lines."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow([_cell(getattr(r, name)) for name in CSV_HEADER])
        return buf.getvalue()
    if fmt == "jsonl":
        return "".join(json.dumps(asdict(r), allow_nan=False) + "\n" for r in records)
    raise ConfigError(f"format must be csv or jsonl, got {fmt!r}")


def _parse_cell(name: str, text: str):
    if name in _STR_FIELDS:
        return text
    if text == "":
        return None
    return int(text) if name in _INT_FIELDS else float(text)


def parse_records(text: str, fmt: str = "csv") -> list[SweepRecord]:
    """Inverse of :func:`emit`."""
    if fmt == "jsonl":
        return [SweepRecord(**json.loads(line)) for line in text.splitlines() if line.strip()]
    if fmt != "csv":
        raise ConfigError(f"format must be csv or jsonl, got {fmt!r}")
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != CSV_HEADER:
        raise ConfigError("unexpected CSV header")
    return [SweepRecord(**{k: _parse_cell(k, v) for k, v in zip(header, row)}) for row in reader]


def write_records(records, path: str | None, fmt: str = "csv") -> str:
    """Write to ``path`` (or return the text when ``path`` is None)."""
    text = emit(records, fmt)
    if path is not None:
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc
    return text
