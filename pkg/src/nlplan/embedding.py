"""Deterministic reference text embedder.

Bag-of-words feature hashing: tokens are lowercased runs of alphanumerics,
each token is hashed (md5, so the mapping is stable across processes and
platforms) into one of ``dim`` buckets, bucket counts are L2-normalized.
It is intentionally crude -- its job is to be a reproducible, dependency-free
stand-in for a real embedding model in tests and the scripted backend.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

DEFAULT_DIM = 256

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize_words(text: str) -> list[str]:
    """Lowercased tokens, split on any non-alphanumeric character."""
    return _TOKEN_RE.findall(text.lower())


def _bucket(token: str, dim: int) -> int:
    digest = hashlib.md5(token.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % dim


def bow_embed(text: str, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Embed ``text`` as L2-normalized hashed token counts.

    A text with no tokens embeds to the zero vector (callers treat it as
    "similar to nothing" rather than an error).
    """
    vec = np.zeros(dim, dtype=np.float64)
    for token in tokenize_words(text):
        vec[_bucket(token, dim)] += 1.0
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; zero vectors are similar to nothing (0.0)."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))
