"""Impaired datagram channel and the Monte-Carlo efficiency experiments.

Randomness comes from numpy's PCG64. Every trial draws from its own
substream, ``SeedSequence(seed, spawn_key=(axis, n, rate_index, trial))``,
so a cell's result does not depend on which other cells ran or in what
order, and parallel runs reproduce serial ones bit for bit.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .keyed import MISS, Packet, ReconstructionState, SlotValue, default_buffer_len

DEFAULT_KEY_SIZES = (5, 10, 15, 20, 50, 100, 200)
DEFAULT_REORDER_RATES = (0.10, 0.35, 0.50, 0.60, 0.70)
DEFAULT_LOSS_RATES = (0.10, 0.15, 0.20, 0.25)
DEFAULT_RUNS = 100
DEFAULT_ROUNDS = 4
RESULTS_HEADER = ("n", "rate_nominal", "rate_realized_mean", "efficiency_mean", "runs")


class InvalidGrid(ValueError):
    pass


class Axis(enum.Enum):
    LOSS = "loss"
    REORDER = "reorder"


@dataclass(frozen=True, slots=True)
class AdjacentSwap:
    pass


@dataclass(frozen=True, slots=True)
class Displacement:
    max_d: int = 3

    def __post_init__(self) -> None:
        if self.max_d < 1:
            raise ValueError("max_d must be >= 1")


ReorderModel = AdjacentSwap | Displacement


@dataclass(frozen=True)
class ChannelConfig:
    loss_prob: float = 0.0
    reorder_prob: float = 0.0
    reorder_model: ReorderModel = AdjacentSwap()
    rng_seed: int = 0

    def __post_init__(self) -> None:
        for name in ("loss_prob", "reorder_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")


@dataclass(frozen=True, slots=True)
class SentPacket:
    seq: int  # 1-based send order, doubles as the stream position
    key_index: int
    payload_id: int


def make_stream(n: int, rounds: int = DEFAULT_ROUNDS) -> list[SentPacket]:
    if n < 2:
        raise ValueError("key length must be >= 2")
    return [SentPacket(s, (s - 1) % n, s) for s in range(1, rounds * n + 1)]


@dataclass(frozen=True)
class LossRecord:
    lost: tuple[int, ...]  # seq numbers
    sent: int

    @property
    def realized_rate(self) -> float:
        return len(self.lost) / self.sent if self.sent else 0.0


def apply_loss(
    stream: Sequence[SentPacket], p: float, rng: np.random.Generator
) -> tuple[list[SentPacket], LossRecord]:
    """Drop each packet independently with probability ``p``."""
    draws = rng.random(len(stream))
    delivered, lost = [], []
    for pkt, u in zip(stream, draws):
        if u < p:
            lost.append(pkt.seq)
        else:
            delivered.append(pkt)
    return delivered, LossRecord(tuple(lost), len(stream))


def apply_reorder(
    stream: Sequence[SentPacket], q: float, model: ReorderModel, rng: np.random.Generator
) -> list[SentPacket]:
    """Permute arrival order; never drops or duplicates."""
    out = list(stream)
    if isinstance(model, AdjacentSwap):
        i = 0
        while i < len(out) - 1:
            if rng.random() < q:
                out[i], out[i + 1] = out[i + 1], out[i]
                i += 2
            else:
                i += 1
        return out
    if isinstance(model, Displacement):
        keys = []
        for i in range(len(out)):
            if rng.random() < q:
                d = int(rng.integers(1, model.max_d + 1))
                keys.append((i + d + 0.5, i))
            else:
                keys.append((float(i), i))
        order = sorted(range(len(out)), key=keys.__getitem__)
        return [out[k] for k in order]
    raise TypeError(f"unknown reorder model {model!r}")


def out_of_sequence_rate(arrived: Sequence[SentPacket]) -> float:
    """Fraction of packets not arriving at their send index."""
    if not arrived:
        return 0.0
    return sum(1 for i, p in enumerate(arrived, 1) if p.seq != i) / len(arrived)


def reference_sequence(stream: Sequence[SentPacket], delivered_seqs: set[int]) -> list[SlotValue]:
    return [Packet(p.payload_id) if p.seq in delivered_seqs else MISS for p in stream]


def efficiency(reference: Sequence[SlotValue], output: Sequence[SlotValue], length: int | None = None) -> float:
    """Share of positions where the output matches ground truth, over ``length`` positions."""
    L = len(reference) if length is None else length
    if L == 0:
        return 1.0

    def at(seq: Sequence[SlotValue], i: int) -> SlotValue:
        return seq[i] if i < len(seq) else MISS

    return sum(1 for i in range(L) if at(output, i) == at(reference, i)) / L


@dataclass(frozen=True)
class TrialResult:
    n: int
    stream_len: int
    delivered: int
    realized_rate: float
    reference: tuple[SlotValue, ...]
    output: tuple[SlotValue, ...]
    efficiency: float


def run_trial(
    n: int,
    axis: Axis,
    rate: float,
    rng: np.random.Generator,
    model: ReorderModel = AdjacentSwap(),
    buffer_len: int | None = None,
    rounds: int = DEFAULT_ROUNDS,
) -> TrialResult:
    stream = make_stream(n, rounds)
    if axis is Axis.LOSS:
        arrived, record = apply_loss(stream, rate, rng)
        realized = record.realized_rate
    else:
        arrived = apply_reorder(stream, rate, model, rng)
        realized = out_of_sequence_rate(arrived)
    state = ReconstructionState(n, buffer_len)
    for pkt in arrived:
        state.push(pkt.key_index, pkt.payload_id)
    state.flush(until=len(stream))
    reference = reference_sequence(stream, {p.seq for p in arrived})
    output = tuple(state.output[: len(stream)])
    return TrialResult(
        n=n,
        stream_len=len(stream),
        delivered=len(arrived),
        realized_rate=realized,
        reference=tuple(reference),
        output=output,
        efficiency=efficiency(reference, output, len(stream)),
    )


@dataclass(frozen=True)
class ExperimentGrid:
    axis: Axis
    key_sizes: tuple[int, ...] = DEFAULT_KEY_SIZES
    rates: tuple[float, ...] = DEFAULT_REORDER_RATES
    runs: int = DEFAULT_RUNS
    rounds: int = DEFAULT_ROUNDS
    buffer: str | int = "half"  # "half", "n-1" or a fixed length

    def __post_init__(self) -> None:
        if not self.key_sizes or not self.rates:
            raise InvalidGrid("key sizes and rates must be non-empty")
        if self.runs < 1:
            raise InvalidGrid("runs must be >= 1")
        if any(n < 2 for n in self.key_sizes):
            raise InvalidGrid("key sizes must be >= 2")
        if any(not 0.0 <= r <= 1.0 for r in self.rates):
            raise InvalidGrid("rates must be probabilities")
        if not (self.buffer in ("half", "n-1") or isinstance(self.buffer, int) and self.buffer >= 1):
            raise InvalidGrid(f"bad buffer setting {self.buffer!r}")

    def buffer_for(self, n: int) -> int:
        if self.buffer == "half":
            return default_buffer_len(n)
        if self.buffer == "n-1":
            return n - 1
        return int(self.buffer)


@dataclass(frozen=True)
class CellResult:
    n: int
    rate_nominal: float
    rate_realized_mean: float
    efficiency_mean: float
    runs: int


@dataclass
class ExperimentResult:
    grid: ExperimentGrid
    config: ChannelConfig
    cells: dict[tuple[int, float], CellResult] = field(default_factory=dict)

    def efficiency(self, n: int, rate: float) -> float:
        return self.cells[(n, rate)].efficiency_mean

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RESULTS_HEADER)
        for n in self.grid.key_sizes:
            for rate in self.grid.rates:
                c = self.cells[(n, rate)]
                w.writerow(
                    (c.n, f"{c.rate_nominal:.4f}", f"{c.rate_realized_mean:.6f}", f"{c.efficiency_mean:.6f}", c.runs)
                )
        return buf.getvalue()

    def to_table_csv(self) -> str:
        """Pivoted layout: one row per key size, one column per rate, percentages."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", *(f"{r:.0%}" for r in self.grid.rates)])
        for n in self.grid.key_sizes:
            w.writerow([f"n={n}", *(f"{100 * self.efficiency(n, r):.2f}%" for r in self.grid.rates)])
        return buf.getvalue()


_AXIS_STREAM = {Axis.LOSS: 0, Axis.REORDER: 1}


def trial_rng(seed: int, axis: Axis, n: int, rate_index: int, trial: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(_AXIS_STREAM[axis], n, rate_index, trial))
    return np.random.Generator(np.random.PCG64(ss))


def _run_cell(args: tuple[ExperimentGrid, ChannelConfig, int, int]) -> CellResult:
    grid, config, n, rate_index = args
    rate = grid.rates[rate_index]
    eff_sum = 0.0
    realized_sum = 0.0
    for trial in range(grid.runs):
        rng = trial_rng(config.rng_seed, grid.axis, n, rate_index, trial)
        res = run_trial(n, grid.axis, rate, rng, config.reorder_model, grid.buffer_for(n), grid.rounds)
        eff_sum += res.efficiency
        realized_sum += res.realized_rate
    return CellResult(n, rate, realized_sum / grid.runs, eff_sum / grid.runs, grid.runs)


def run_experiment(grid: ExperimentGrid, config: ChannelConfig = ChannelConfig(), workers: int = 1) -> ExperimentResult:
    """Average SRA efficiency over ``grid.runs`` seeded trials per (n, rate) cell.

    The channel applies only the grid's axis; the template's own loss and
    reorder probabilities are ignored so the two impairments never mix.
    """
    jobs = [(grid, config, n, ri) for n in grid.key_sizes for ri in range(len(grid.rates))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_run_cell, jobs))
    else:
        cells = [_run_cell(job) for job in jobs]
    result = ExperimentResult(grid, config)
    for cell in cells:
        result.cells[(cell.n, cell.rate_nominal)] = cell
    return result


def parse_experiment_config(text: str) -> tuple[ExperimentGrid, ChannelConfig]:
    """Read ``key=value`` lines.

    Recognised keys: ``axis``, ``key_sizes``, ``rates``, ``runs``, ``rounds``,
    ``seed``, ``model`` (``adjacent`` or ``displacement``), ``max_d``,
    ``buffer``. Lists are comma separated; ``#`` starts a comment.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise InvalidGrid(f"line {lineno}: expected key=value, got {raw!r}")
        values[key.strip()] = val.strip()
    known = {"axis", "key_sizes", "rates", "runs", "rounds", "seed", "model", "max_d", "buffer"}
    unknown = set(values) - known
    if unknown:
        raise InvalidGrid(f"unknown config keys: {', '.join(sorted(unknown))}")
    try:
        axis = Axis(values.get("axis", "reorder"))
        default_rates = DEFAULT_LOSS_RATES if axis is Axis.LOSS else DEFAULT_REORDER_RATES
        buffer: str | int = values.get("buffer", "half")
        if buffer not in ("half", "n-1"):
            buffer = int(buffer)
        grid = ExperimentGrid(
            axis=axis,
            key_sizes=_int_list(values["key_sizes"]) if "key_sizes" in values else DEFAULT_KEY_SIZES,
            rates=_float_list(values["rates"]) if "rates" in values else default_rates,
            runs=int(values.get("runs", DEFAULT_RUNS)),
            rounds=int(values.get("rounds", DEFAULT_ROUNDS)),
            buffer=buffer,
        )
        config = ChannelConfig(
            reorder_model=make_model(values.get("model", "adjacent"), int(values.get("max_d", 3))),
            rng_seed=int(values.get("seed", 0)),
        )
    except (KeyError, ValueError) as exc:
        raise InvalidGrid(str(exc)) from None
    return grid, config


def make_model(name: str, max_d: int = 3) -> ReorderModel:
    if name == "adjacent":
        return AdjacentSwap()
    if name == "displacement":
        return Displacement(max_d)
    raise ValueError(f"unknown reorder model {name!r}")


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def is_monotone(values: Sequence[float], slack: float) -> bool:
    """True when no value drops more than ``slack`` below any earlier one."""
    best = -math.inf
    for v in values:
        if v < best - slack:
            return False
        best = max(best, v)
    return True


def with_seed(config: ChannelConfig, seed: int) -> ChannelConfig:
    return replace(config, rng_seed=seed)
