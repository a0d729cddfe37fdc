"""Validity classifier head: projection layer, linear output, sigmoid.

Inference is deterministic (dropout applies only during training). The
statistical block of the input (last STAT_DIM dims) is standardised with the
profile fitted on the training split, carried inside the model.

Serialized format (little-endian), magic "VCLC":
  magic[4] | u32 version | u32 input_dim | u32 hidden | u32 stat_dim |
  u64 rng_seed | f32 dropout_rate |
  f32 W1[input_dim*hidden] | f32 b1[hidden] | f32 w2[hidden] | f32 b2 |
  f32 mean[stat_dim] | f32 std[stat_dim]
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DimensionMismatchError, TraceSchemaError
from ..features import STAT_DIM, NormalizationProfile

MAGIC = b"VCLC"
FORMAT_VERSION = 1


def sigmoid(z):
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class ClassifierModel:
    input_dim: int
    hidden: int
    w1: np.ndarray  # (input_dim, hidden)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    b2: float
    profile: NormalizationProfile = field(default_factory=NormalizationProfile.identity)
    dropout_rate: float = 0.1
    rng_seed: int = 0
    stat_dim: int = STAT_DIM

    @classmethod
    def init(
        cls,
        input_dim: int,
        hidden: int = 256,
        dropout_rate: float = 0.1,
        rng_seed: int = 0,
        stat_dim: int | None = None,
    ) -> "ClassifierModel":
        if stat_dim is None:
            stat_dim = min(STAT_DIM, input_dim)
        rng = np.random.default_rng(rng_seed)
        w1 = rng.normal(0.0, np.sqrt(2.0 / input_dim), size=(input_dim, hidden))
        w2 = rng.normal(0.0, np.sqrt(2.0 / hidden), size=(hidden,))
        return cls(
            input_dim=input_dim,
            hidden=hidden,
            w1=w1,
            b1=np.zeros(hidden),
            w2=w2,
            b2=0.0,
            profile=NormalizationProfile.identity(stat_dim),
            dropout_rate=dropout_rate,
            rng_seed=rng_seed,
            stat_dim=stat_dim,
        )

    # ---- inference ----

    def _standardize(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        sem = x[..., : x.shape[-1] - self.stat_dim]
        stat = x[..., x.shape[-1] - self.stat_dim :]
        return np.concatenate([sem, self.profile.apply(stat)], axis=-1)

    def forward_batch(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.input_dim:
            raise DimensionMismatchError(
                f"classifier expects {self.input_dim} dims, got {x.shape[1]}"
            )
        z = self._standardize(x)
        h = np.maximum(z @ self.w1 + self.b1, 0.0)
        return sigmoid(h @ self.w2 + self.b2)

    def forward(self, x) -> float:
        """P(valid) for one feature vector."""
        return float(self.forward_batch(np.asarray(x).reshape(1, -1))[0])

    # ---- serialization ----

    def save(self, path: str | Path):
        path = Path(path)
        parts = [
            MAGIC,
            struct.pack(
                "<IIIIQf",
                FORMAT_VERSION,
                self.input_dim,
                self.hidden,
                self.stat_dim,
                self.rng_seed,
                self.dropout_rate,
            ),
            self.w1.astype("<f4").tobytes(),
            self.b1.astype("<f4").tobytes(),
            self.w2.astype("<f4").tobytes(),
            struct.pack("<f", self.b2),
            self.profile.mean.astype("<f4").tobytes(),
            self.profile.std.astype("<f4").tobytes(),
        ]
        path.write_bytes(b"".join(parts))

    @classmethod
    def load(cls, path: str | Path) -> "ClassifierModel":
        data = Path(path).read_bytes()
        if data[:4] != MAGIC:
            raise TraceSchemaError(f"{path}: bad magic {data[:4]!r}")
        off = 4
        version, input_dim, hidden, stat_dim, rng_seed, dropout = struct.unpack_from(
            "<IIIIQf", data, off
        )
        if version != FORMAT_VERSION:
            raise TraceSchemaError(f"{path}: unsupported version {version}")
        off += struct.calcsize("<IIIIQf")

        def take(n):
            nonlocal off
            arr = np.frombuffer(data, dtype="<f4", count=n, offset=off).astype(np.float64)
            off += 4 * n
            return arr

        w1 = take(input_dim * hidden).reshape(input_dim, hidden)
        b1 = take(hidden)
        w2 = take(hidden)
        b2 = float(take(1)[0])
        mean = take(stat_dim)
        std = take(stat_dim)
        return cls(
            input_dim=input_dim,
            hidden=hidden,
            w1=w1,
            b1=b1,
            w2=w2,
            b2=b2,
            profile=NormalizationProfile(mean=mean, std=std),
            dropout_rate=dropout,
            rng_seed=rng_seed,
            stat_dim=stat_dim,
        )
