"""768-dimensional text embeddings behind a pluggable backend.

Two backends implement the same contract:

* :class:`HashEncoder`: hermetic feature hashing: whitespace tokens of
  the normalized text plus padded character trigrams within each token,
  hashed with 64-bit FNV-1a into 768 signed buckets, L2-normalized.
  A pure function of the input string.
* :class:`RemoteEncoder`: client for a neural encoder service speaking
  JSON: ``{"texts": [...]}`` in, ``{"vectors": [[...768 reals...]]}``
  out. Vectors are validated for length and finiteness.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
import requests

from .errors import (
    BadRemoteVectorError,
    ConfigError,
    EmptyTextError,
    RemoteUnavailableError,
)
from .textnorm import normalize, trigrams

TEXT_DIM = 768

ENDPOINT_ENV = "SCHOLARLINK_ENCODER_ENDPOINT"

_FNV_OFFSET = 14695981039346656037
_FNV_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1


def fnv1a_64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


@dataclass(frozen=True)
class HashEncoder:
    """Deterministic local encoder; no state, no network."""


@dataclass(frozen=True)
class RemoteEncoder:
    endpoint: str
    timeout: float = 10.0
    session: requests.Session | None = field(default=None, compare=False)


EncoderBackend = Union[HashEncoder, RemoteEncoder]


def backend_from_name(name: str, endpoint: str | None = None, timeout: float = 10.0) -> EncoderBackend:
    """Build a backend from its CLI name; the remote endpoint falls back
    to the SCHOLARLINK_ENCODER_ENDPOINT environment variable."""
    if name == "hash":
        return HashEncoder()
    if name == "remote":
        endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        if not endpoint:
            raise ConfigError(
                f"remote encoder needs an endpoint (flag or {ENDPOINT_ENV})"
            )
        return RemoteEncoder(endpoint, timeout=timeout)
    raise ConfigError(f"unknown encoder backend {name!r}")


def _hash_features(norm: str) -> list[str]:
    tokens = norm.split()
    feats = list(tokens)
    for token in tokens:
        feats.extend(sorted(trigrams(token)))
    return feats


def _hash_encode(text: str, index: int | None) -> np.ndarray:
    norm = normalize(text)
    if not norm:
        raise EmptyTextError("text is empty after normalization", index=index)
    vec = np.zeros(TEXT_DIM, dtype=np.float64)
    for feat in _hash_features(norm):
        h = fnv1a_64(feat.encode("utf-8"))
        bucket = (h >> 1) % TEXT_DIM
        vec[bucket] += 1.0 if (h & 1) == 0 else -1.0
    n = float(np.linalg.norm(vec))
    if n > 0.0:
        vec /= n
    return vec


def _remote_encode(backend: RemoteEncoder, texts: Sequence[str]) -> list[np.ndarray]:
    session = backend.session or requests
    try:
        resp = session.post(
            backend.endpoint, json={"texts": list(texts)}, timeout=backend.timeout
        )
    except requests.RequestException as exc:
        raise RemoteUnavailableError(backend.endpoint, str(exc)) from exc
    if resp.status_code != 200:
        raise RemoteUnavailableError(backend.endpoint, f"status {resp.status_code}")
    try:
        data = resp.json()
    except ValueError:
        raise RemoteUnavailableError(backend.endpoint, "response body is not JSON") from None
    vectors = data.get("vectors") if isinstance(data, dict) else None
    if not isinstance(vectors, list) or len(vectors) != len(texts):
        raise BadRemoteVectorError(
            f"expected {len(texts)} vectors, got "
            f"{len(vectors) if isinstance(vectors, list) else 'none'}"
        )
    out: list[np.ndarray] = []
    for i, raw in enumerate(vectors):
        try:
            vec = np.asarray(raw, dtype=np.float64)
        except (TypeError, ValueError):
            raise BadRemoteVectorError(f"vector {i} is not numeric") from None
        if vec.shape != (TEXT_DIM,):
            raise BadRemoteVectorError(
                f"vector {i} has length {vec.shape[0] if vec.ndim == 1 else 'n/a'}, "
                f"expected {TEXT_DIM}"
            )
        if not np.all(np.isfinite(vec)):
            raise BadRemoteVectorError(f"vector {i} contains non-finite values")
        out.append(vec)
    return out


def batch_encode(backend: EncoderBackend, texts: Sequence[str]) -> list[np.ndarray]:
    """Encode several texts; one round-trip for the remote backend.
    Element i equals ``encode(backend, texts[i])``."""
    for i, text in enumerate(texts):
        if not normalize(text):
            raise EmptyTextError("text is empty after normalization", index=i)
    if isinstance(backend, HashEncoder):
        return [_hash_encode(text, i) for i, text in enumerate(texts)]
    return _remote_encode(backend, texts)


def encode(backend: EncoderBackend, text: str) -> np.ndarray:
    """Encode one text into a finite 768-dim vector."""
    if isinstance(backend, HashEncoder):
        return _hash_encode(text, None)
    if not normalize(text):
        raise EmptyTextError("text is empty after normalization")
    return _remote_encode(backend, [text])[0]
