"""BB84 / BBM92 key-exchange simulation and QBER corpora.

Sessions are simulated in vectorised batches. Session ``i`` of a corpus reads
its random numbers from the counter-based stream ``(master_seed, i, attempt)``,
so the corpus is identical however the sessions are chunked or parallelised.

Per-session draw layout (one uniform each)::

    [strength, alice_bits(l), alice_bases(l), bob_bases(l), alice_meas(l), bob_meas(l)]
"""

from __future__ import annotations

import enum
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import quantum as q
from .quantum import NoiseKind
from .rng import uniforms

QKD_STREAM_TAG = 1
MAX_ATTEMPTS = 64
DEFAULT_CHUNK = 4096


class Protocol(str, enum.Enum):
    BB84 = "bb84"
    BBM92 = "bbm92"


class Placement(str, enum.Enum):
    CHANNEL = "channel"
    GATE = "gate"


@dataclass(frozen=True)
class SessionConfig:
    """How one key-exchange session is run.

    ``strength`` fixes the noise strength; when it is ``None`` every session
    draws its own strength uniformly from ``[0, p_max]``.
    """

    protocol: Protocol = Protocol.BB84
    placement: Placement = Placement.CHANNEL
    noise_kind: NoiseKind = NoiseKind.BIT_FLIP
    key_length: int = 16
    p_max: float = 1.0
    strength: float | None = None
    both_arms: bool = False

    def __post_init__(self):
        object.__setattr__(self, "protocol", Protocol(self.protocol))
        object.__setattr__(self, "placement", Placement(self.placement))
        object.__setattr__(self, "noise_kind", NoiseKind(self.noise_kind))
        if int(self.key_length) < 1:
            raise ValueError(f"key_length must be >= 1, got {self.key_length}")
        if not 0.0 <= self.p_max <= 1.0:
            raise ValueError(f"p_max must lie in [0, 1], got {self.p_max}")
        if self.strength is not None and not 0.0 <= self.strength <= 1.0:
            raise ValueError(f"strength must lie in [0, 1], got {self.strength}")

    @property
    def draws_per_session(self) -> int:
        return 1 + 5 * self.key_length

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("protocol", "placement", "noise_kind"):
            d[k] = d[k].value
        return d


@dataclass
class SessionRecord:
    """Bits and bases of one session (bases: 0 computational, 1 diagonal)."""

    alice_bits: np.ndarray
    alice_bases: np.ndarray
    bob_bases: np.ndarray
    bob_bits: np.ndarray
    strength: float = 0.0

    @property
    def matched_mask(self) -> np.ndarray:
        return self.alice_bases == self.bob_bases

    @property
    def sifted_length(self) -> int:
        return int(np.count_nonzero(self.matched_mask))


def compute_qber(rec: SessionRecord) -> float | None:
    """Mismatched sifted bits over sifted length; ``None`` if nothing was sifted."""
    matched = rec.matched_mask
    n = int(np.count_nonzero(matched))
    if n == 0:
        return None
    wrong = np.count_nonzero(rec.alice_bits[matched] != rec.bob_bits[matched])
    return wrong / n


def batch_qber(alice_bits, alice_bases, bob_bases, bob_bits) -> np.ndarray:
    """Row-wise QBER of ``(sessions, l)`` arrays; NaN where nothing was sifted."""
    matched = alice_bases == bob_bases
    n = matched.sum(axis=-1)
    wrong = (matched & (alice_bits != bob_bits)).sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(n > 0, wrong / np.maximum(n, 1), np.nan)


# -- batched simulation ------------------------------------------------------

_PREPARED = np.array(
    [
        [q.pure(q.KET_0), q.pure(q.KET_1)],
        [q.pure(q.KET_PLUS), q.pure(q.KET_MINUS)],
    ]
)  # indexed [basis, bit]
_ZERO_1Q = q.pure(q.KET_0)
_ZERO_2Q = q.pure(np.array([1, 0, 0, 0], dtype=complex))


def _where(mask, a, b):
    return np.where(mask[..., None, None], a, b)


def _sample(rho, basis, target, u):
    """Draw one outcome per element and return ``(outcome, collapsed rho)``."""
    p0, p1 = q.measure_probs(rho, basis, target)
    outcome = np.where(p0 <= q.COLLAPSE_TOL, 1, np.where(p1 <= q.COLLAPSE_TOL, 0, u >= p0))
    outcome = outcome.astype(np.int8)
    return outcome, q.collapse(rho, basis, target, outcome, check=False)


def _noisy(rho, gate, kraus, target, mask=None):
    out = q.apply_kraus(q.apply_unitary(rho, gate, (target,)), kraus, target)
    return out if mask is None else _where(mask, out, rho)


def _simulate_bb84(cfg, kraus, a_bits, a_bases, b_bases, u_meas):
    s, l = a_bits.shape
    if cfg.placement is Placement.CHANNEL:
        rho = q.apply_kraus(_PREPARED[a_bases, a_bits], kraus, 0)
        p0, _ = q.measure_probs(rho, b_bases, 0)
        return (u_meas >= p0).astype(np.int8)
    # gate noise only: every applied gate is followed by the channel
    rho = np.broadcast_to(_ZERO_1Q, (s, l, 2, 2))
    rho = _noisy(rho, q.SIGMA_X, kraus, 0, a_bits == 1)
    rho = _noisy(rho, q.HADAMARD, kraus, 0, a_bases == 1)
    rho = _noisy(rho, q.HADAMARD, kraus, 0, b_bases == 1)
    p0, _ = q.measure_probs(rho, 0, 0)
    return (u_meas >= p0).astype(np.int8)


def _simulate_bbm92(cfg, kraus, a_bases, b_bases, u_a, u_b):
    s, l = a_bases.shape
    if cfg.placement is Placement.CHANNEL:
        rho = np.broadcast_to(q.BELL_PHI_PLUS, (s, l, 4, 4))
        rho = q.apply_kraus(rho, kraus, 1)
        if cfg.both_arms:
            rho = q.apply_kraus(rho, kraus, 0)
        a_out, rho = _sample(rho, a_bases, 0, u_a)
        b_out, _ = _sample(rho, b_bases, 1, u_b)
        return a_out, b_out
    rho = np.broadcast_to(_ZERO_2Q, (s, l, 4, 4))
    rho = _noisy(rho, q.HADAMARD, kraus, 0)
    rho = q.apply_unitary(rho, q.CNOT_MATRIX, (0, 1))
    rho = q.apply_kraus(q.apply_kraus(rho, kraus, 0), kraus, 1)
    rho = _noisy(rho, q.HADAMARD, kraus, 0, a_bases == 1)
    rho = _noisy(rho, q.HADAMARD, kraus, 1, b_bases == 1)
    comp = np.zeros_like(a_bases)
    a_out, rho = _sample(rho, comp, 0, u_a)
    b_out, _ = _sample(rho, comp, 1, u_b)
    return a_out, b_out


def simulate_batch(cfg: SessionConfig, u: np.ndarray) -> dict:
    """Run one session per row of the uniform draws ``u``.

    Returns a dict of ``(sessions, l)`` int8 arrays plus per-session
    ``strength``.
    """
    l = cfg.key_length
    u = np.atleast_2d(u)
    if u.shape[1] < cfg.draws_per_session:
        raise ValueError("not enough draws per session")
    strength = (
        np.full(u.shape[0], cfg.strength) if cfg.strength is not None else cfg.p_max * u[:, 0]
    )
    cols = [u[:, 1 + i * l : 1 + (i + 1) * l] for i in range(5)]
    a_bits, a_bases, b_bases = ((c >= 0.5).astype(np.int8) for c in cols[:3])
    kraus = q.kraus_elements(cfg.noise_kind, strength)[:, None]
    if cfg.protocol is Protocol.BB84:
        b_bits = _simulate_bb84(cfg, kraus, a_bits, a_bases, b_bases, cols[4])
    else:
        a_bits, b_bits = _simulate_bbm92(cfg, kraus, a_bases, b_bases, cols[3], cols[4])
    return {
        "alice_bits": a_bits,
        "alice_bases": a_bases,
        "bob_bases": b_bases,
        "bob_bits": b_bits,
        "strength": strength,
    }


def run_session(cfg: SessionConfig, seed: int, session: int = 0, attempt: int = 0) -> SessionRecord:
    """Simulate a single session from its counter-based stream."""
    u = uniforms(seed, [session], cfg.draws_per_session, QKD_STREAM_TAG, attempt)
    out = simulate_batch(cfg, u)
    return SessionRecord(
        out["alice_bits"][0],
        out["alice_bases"][0],
        out["bob_bases"][0],
        out["bob_bits"][0],
        float(out["strength"][0]),
    )


def run_bb84(cfg: SessionConfig, seed: int, session: int = 0, attempt: int = 0) -> SessionRecord:
    if cfg.protocol is not Protocol.BB84:
        raise ValueError("run_bb84 needs a BB84 config")
    return run_session(cfg, seed, session, attempt)


def run_bbm92(cfg: SessionConfig, seed: int, session: int = 0, attempt: int = 0) -> SessionRecord:
    if cfg.protocol is not Protocol.BBM92:
        raise ValueError("run_bbm92 needs a BBM92 config")
    return run_session(cfg, seed, session, attempt)


# -- corpora -----------------------------------------------------------------


@dataclass
class QberCorpus:
    label: NoiseKind
    values: np.ndarray
    seed: int
    config: SessionConfig = field(default_factory=SessionConfig)

    def __len__(self) -> int:
        return len(self.values)

    def metadata(self) -> dict:
        return {
            "label": NoiseKind(self.label).value,
            "protocol": self.config.protocol.value,
            "placement": self.config.placement.value,
            "noise_kind": self.config.noise_kind.value,
            "p_max": self.config.p_max,
            "strength": self.config.strength,
            "both_arms": self.config.both_arms,
            "key_length": self.config.key_length,
            "count": len(self.values),
            "master_seed": self.seed,
        }


def _chunk_qber(cfg: SessionConfig, master_seed: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.uint64)
    attempt = np.zeros(len(idx), dtype=np.uint64)
    out = np.full(len(idx), np.nan)
    todo = np.arange(len(idx))
    for _ in range(MAX_ATTEMPTS):
        u = uniforms(master_seed, idx[todo], cfg.draws_per_session, QKD_STREAM_TAG, attempt[todo])
        res = simulate_batch(cfg, u)
        qb = batch_qber(res["alice_bits"], res["alice_bases"], res["bob_bases"], res["bob_bits"])
        out[todo] = qb
        todo = todo[np.isnan(qb)]
        if todo.size == 0:
            return out
        attempt[todo] += 1
    raise RuntimeError("sessions kept producing an empty sifted key")


def _n_threads() -> int:
    try:
        return max(1, int(os.environ.get("NOISELAB_THREADS", "1")))
    except ValueError:
        return 1


def generate_corpus(
    cfg: SessionConfig, count: int, master_seed: int, chunk: int = DEFAULT_CHUNK, threads: int | None = None
) -> QberCorpus:
    """Simulate ``count`` sessions and collect their (defined) QBERs.

    Sessions whose sifted key is empty are re-run from the next attempt of
    the same stream, so exactly ``count`` values come back.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    bounds = [(s, min(s + chunk, count)) for s in range(0, count, chunk)]
    threads = threads or _n_threads()
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda b: _chunk_qber(cfg, master_seed, *b), bounds))
    else:
        parts = [_chunk_qber(cfg, master_seed, *b) for b in bounds]
    return QberCorpus(cfg.noise_kind, np.concatenate(parts), master_seed, cfg)


# -- file format ---------------------------------------------------------------


def write_corpus(corpus: QberCorpus, path) -> tuple[Path, Path]:
    """Write ``<path>`` (CSV, header ``qber``) and ``<path>.json`` metadata."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write("qber\n")
        fh.writelines(f"{v:.17g}\n" for v in corpus.values.tolist())
    meta = path.with_suffix(path.suffix + ".json")
    meta.write_text(json.dumps(corpus.metadata(), indent=2, sort_keys=True) + "\n")
    return path, meta


def read_corpus(path) -> QberCorpus:
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "qber":
            raise ValueError(f"{path}: expected header 'qber', got {header!r}")
        values = np.array([float(line) for line in fh if line.strip()])
    meta_path = path.with_suffix(path.suffix + ".json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    cfg = SessionConfig(
        protocol=meta.get("protocol", "bb84"),
        placement=meta.get("placement", "channel"),
        noise_kind=meta.get("noise_kind", meta.get("label", "bit_flip")),
        key_length=meta.get("key_length", 16),
        p_max=meta.get("p_max", 1.0),
        strength=meta.get("strength"),
        both_arms=meta.get("both_arms", False),
    )
    if "count" in meta and meta["count"] != len(values):
        raise ValueError(f"{path}: metadata count {meta['count']} != {len(values)} rows")
    return QberCorpus(NoiseKind(meta.get("label", cfg.noise_kind)), values, int(meta.get("master_seed", 0)), cfg)
