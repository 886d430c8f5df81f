"""Monte Carlo logical error rates and result reporting."""

from __future__ import annotations

import csv
import io
import math
import time
from collections import defaultdict
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .analysis import code_distance, syndrome_distance
from .codes import CssCode, code_from_spec, drop_redundant_rows
from .decoder import Channel, Decoder, DecoderConfig
from .pheno import build_spacetime, channel_priors, detectors, observables, sample_errors
from .window import SlidingWindow, TwoStep, split_rounds

PROTOCOLS = ("sw", "full", "two-step")
BATCH = 1000


@dataclass(frozen=True)
class SimParams:
    p: float
    q: float | None = None
    N: int | None = None
    T: int | None = None
    protocol: str = "sw"
    shots: int = 1000
    seed: int = 0
    rows_removed: int = 0

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"protocol must be one of {PROTOCOLS}")
        if self.shots <= 0:
            raise ValueError("shots must be positive")
        if self.N is not None and self.N < 1:
            raise ValueError("need at least one round")


@dataclass(frozen=True)
class SimRecord:
    code_id: str
    ell: int
    n: int
    k: int
    d: int
    d_S: int
    rows_removed: int
    p: float
    q: float
    N: int
    T: int
    protocol: str
    decoder_id: str
    shots: int
    fails: int
    fail_rate: float
    seed: int
    wall_time: float
    ci_low: float
    ci_high: float

    def __post_init__(self):
        if self.shots <= 0:
            raise ValueError("shots must be positive")


def wilson_interval(fails: int, shots: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Two-sided Wilson score interval (95% by default)."""
    if shots <= 0:
        raise ValueError("shots must be positive")
    f = fails / shots
    den = 1 + z * z / shots
    mid = (f + z * z / (2 * shots)) / den
    half = z * math.sqrt(f * (1 - f) / shots + z * z / (4 * shots * shots)) / den
    # pin the open ends exactly; the formula leaves round-off there
    lo = 0.0 if fails == 0 else max(0.0, mid - half)
    hi = 1.0 if fails == shots else min(1.0, mid + half)
    return lo, hi


def _batch_rng(seed: int, batch: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, batch]))


def _resolve_code(spec) -> CssCode:
    return spec if isinstance(spec, CssCode) else code_from_spec(spec)


def run_simulation(spec, params: SimParams, cfg: DecoderConfig | None = None) -> SimRecord:
    """Sample ``params.shots`` phenomenological errors and count logical failures.

    A shot fails when any decoded observable differs from the true one.  Shots
    are drawn in fixed batches of ``BATCH``, batch ``i`` using the stream
    ``SeedSequence([seed, i])``.
    """
    cfg = cfg or DecoderConfig()
    t0 = time.perf_counter()
    base = _resolve_code(spec)
    d = code_distance(base)
    d_s = syndrome_distance(base)
    code = drop_redundant_rows(base, params.rows_removed)
    N = params.N if params.N is not None else d
    T = params.T if params.T is not None else N
    q = params.p if params.q is None else params.q
    st = build_spacetime(code, N)
    ch = Channel.from_priors(channel_priors(st, params.p, q))
    if params.protocol == "sw":
        dec = SlidingWindow(st, ch, T, cfg)
    elif params.protocol == "full":
        T = N
        full = Decoder(st.H, ch, cfg)
    else:
        T = 1
        two = TwoStep(code, params.p, q, cfg)

    fails = 0
    done = 0
    batch = 0
    while done < params.shots:
        size = min(BATCH, params.shots - done)
        err = sample_errors(st, params.p, q, _batch_rng(params.seed, batch), size)
        syn = detectors(st, err)
        tau = observables(st, err)
        for i in range(size):
            s = syn[i]
            if not s.any():
                hat = np.zeros_like(tau[i])
            elif params.protocol == "sw":
                hat = dec.decode(s)[1]
            elif params.protocol == "full":
                hat = st.L.mul_vec(full.decode(s).estimate)
            else:
                hat = two.decode(split_rounds(st, s))[1]
            fails += bool((hat != tau[i]).any())
        done += size
        batch += 1

    lo, hi = wilson_interval(fails, params.shots)
    return SimRecord(
        code_id=base.name or "custom",
        ell=base.ell,
        n=base.n,
        k=base.k,
        d=int(d) if d is not None else -1,
        d_S=int(d_s),
        rows_removed=params.rows_removed,
        p=params.p,
        q=q,
        N=N,
        T=T,
        protocol=params.protocol,
        decoder_id=cfg.ident,
        shots=params.shots,
        fails=fails,
        fail_rate=fails / params.shots,
        seed=params.seed,
        wall_time=round(time.perf_counter() - t0, 3),
        ci_low=lo,
        ci_high=hi,
    )


# --------------------------------------------------------------------------
# reporting


class ReportError(ValueError):
    pass


FIELDS = [f.name for f in fields(SimRecord)]


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=FIELDS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(asdict(r))
    return buf.getvalue()


def read_records(path: str | Path) -> list[SimRecord]:
    types = {f.name: f.type for f in fields(SimRecord)}
    conv = {"int": int, "float": float, "str": str}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(SimRecord(**{k: conv[types[k]](v) for k, v in row.items() if k in types}))
    return out


def fit_slope(ps, rates, weights=None) -> tuple[float, float]:
    """Weighted least-squares ``(slope, intercept)`` of ``log rate`` against ``log p``."""
    x = np.log(np.asarray(ps, dtype=float))
    y = np.log(np.asarray(rates, dtype=float))
    if len(x) < 2 or np.ptp(x) == 0:
        raise ReportError("need at least two distinct p values with nonzero rates")
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    slope, icpt = np.polyfit(x, y, 1, w=np.sqrt(w))
    return float(slope), float(icpt)


def find_crossing(curve_a, curve_b) -> tuple[float, float] | None:
    """Intersection of two ``[(p, rate), ...]`` curves by log-log interpolation.

    Returns ``None`` when the curves coincide or never cross on their shared
    ``p`` values.
    """
    a, b = dict(curve_a), dict(curve_b)
    common = sorted(set(a) & set(b))
    common = [p for p in common if a[p] > 0 and b[p] > 0]
    if len(common) < 2:
        raise ReportError("curves share fewer than two p values with nonzero rates")
    lx = np.log(common)
    diff = np.array([math.log(a[p]) - math.log(b[p]) for p in common])
    if np.allclose(diff, 0.0):
        return None
    for i in range(len(common) - 1):
        d0, d1 = diff[i], diff[i + 1]
        if d0 == 0 and d1 != 0:
            return common[i], a[common[i]]
        if d0 * d1 < 0:
            t = d0 / (d0 - d1)
            x = lx[i] + t * (lx[i + 1] - lx[i])
            ya = math.log(a[common[i]]) + t * (math.log(a[common[i + 1]]) - math.log(a[common[i]]))
            return float(math.exp(x)), float(math.exp(ya))
    return None


def _curve_key(r: SimRecord) -> tuple:
    return (r.code_id, r.rows_removed, r.N, r.T, r.protocol, r.decoder_id)


def _label(key: tuple) -> str:
    code_id, m, N, T, proto, dec = key
    return f"{code_id} m={m} N={N} T={T} {proto} {dec}"


def report(records, mode: str = "csv") -> str:
    records = list(records)
    if mode == "csv":
        return records_to_csv(records)
    if len(records) < 2:
        raise ReportError(f"{mode} mode needs at least two records")
    groups: dict[tuple, list[SimRecord]] = defaultdict(list)
    for r in records:
        groups[_curve_key(r)].append(r)
    if mode == "slope":
        lines = []
        for key, rs in groups.items():
            pts = [r for r in rs if r.fails > 0]
            if len(pts) < 2:
                lines.append(f"{_label(key)}: slope undefined (fewer than two points with failures)")
                continue
            w = [r.fails / max(1e-12, 1 - r.fail_rate) for r in pts]
            s, _ = fit_slope([r.p for r in pts], [r.fail_rate for r in pts], w)
            lines.append(f"{_label(key)}: slope {s:.3f} over {len(pts)} points")
        return "\n".join(lines) + "\n"
    if mode == "crossing":
        if len(groups) != 2:
            raise ReportError(f"crossing mode needs exactly two curves, got {len(groups)}")
        (ka, ra), (kb, rb) = groups.items()
        x = find_crossing([(r.p, r.fail_rate) for r in ra], [(r.p, r.fail_rate) for r in rb])
        if x is None:
            return f"{_label(ka)} vs {_label(kb)}: crossing undefined\n"
        return f"{_label(ka)} vs {_label(kb)}: crossing at p={x[0]:.6g}, rate={x[1]:.6g}\n"
    raise ReportError(f"unknown report mode {mode!r}")
