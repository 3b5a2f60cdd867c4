"""Embedding and image-generation backends.

Two implementations per role:

* mock  - pure functions of their inputs, bitwise reproducible across runs
          and platforms.  Used for tests, demos and offline work.
* http  - thin JSON clients for a real CLIP-style embedder / diffusion
          server.  Protocol:

            POST {embedder}/embed_text  {"text": str}        -> {"vector": [512 floats]}
            POST {embedder}/embed_image {"png_base64": str}  -> {"vector": [512 floats]}
            POST {generator}/generate   {"prompt","guidance_scale","seed","width","height"}
                                                             -> {"png_base64": str}

Selected via env vars PM_EMBEDDER_URL / PM_GENERATOR_URL (absent -> mock).

Mock hash expansion (fixed constants, do not change - corpora depend on them):

* 64-bit FNV-1a over the input bytes, offset 0xcbf29ce484222325,
  prime 0x100000001b3.
* splitmix64 stream seeded with the FNV hash: state += 0x9e3779b97f4a7c15;
  z = state; z ^= z>>30; z *= 0xbf58476d1ce4e5b9; z ^= z>>27;
  z *= 0x94d049bb133111eb; z ^= z>>31.
* each 64-bit output maps to a real in [-1, 1) via ((z >> 11) * 2**-53) * 2 - 1.

Text and image inputs are domain-separated with the prefixes b"text:" and
b"image:" before hashing, so identical byte strings embed differently per
modality.
"""

from __future__ import annotations

import base64
import concurrent.futures
import os
import struct
import time
import zlib
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._hashing import fnv1a64, splitmix64_stream
from .errors import (
    BackendTimeout,
    BackendUnavailable,
    DimensionMismatch,
    InvalidRange,
    PartialFailure,
    UndecodableImage,
)

EMBED_DIM = 512

ENV_EMBEDDER_URL = "PM_EMBEDDER_URL"
ENV_GENERATOR_URL = "PM_GENERATOR_URL"
ENV_SEED = "PM_SEED"

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def hash_expand_unit(data: bytes, dim: int = EMBED_DIM) -> np.ndarray:
    """Expand bytes into a deterministic unit-norm float32 vector."""
    words = splitmix64_stream(fnv1a64(data), dim)
    vals = np.array([(w >> 11) * 2.0**-53 for w in words], dtype=np.float64)
    vals = vals * 2.0 - 1.0
    norm = np.linalg.norm(vals)
    if norm == 0.0:  # unreachable in practice; keep the contract total
        vals[0] = 1.0
        norm = 1.0
    return (vals / norm).astype(np.float32)


def concat_features(text_vec: np.ndarray, image_vec: np.ndarray) -> np.ndarray:
    """Concatenate a text and an image embedding into one 1024-d vector.

    Deliberately not renormalized: each half is unit-norm, so the overall
    norm is sqrt(2) and both halves keep equal weight under cosine distance.
    """
    if text_vec.shape != (EMBED_DIM,) or image_vec.shape != (EMBED_DIM,):
        raise DimensionMismatch(
            f"expected two {EMBED_DIM}-d vectors, got {text_vec.shape} and {image_vec.shape}"
        )
    return np.concatenate([text_vec, image_vec]).astype(np.float32)


def sample_guidance(gs_min: float, gs_max: float, n: int, rng_seed: int) -> list[float]:
    """Draw n guidance scales i.i.d. uniform on [gs_min, gs_max], seeded."""
    if not (0 < gs_min <= gs_max):
        raise InvalidRange(f"need 0 < min <= max, got [{gs_min}, {gs_max}]")
    if n < 1:
        raise InvalidRange(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(rng_seed)
    return [float(v) for v in rng.uniform(gs_min, gs_max, size=n)]


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    guidance_scale: float
    seed: int
    width: int = 512
    height: int = 512

    def __post_init__(self):
        if self.guidance_scale <= 0:
            raise InvalidRange(f"guidance_scale must be > 0, got {self.guidance_scale}")
        if not (64 <= self.width <= 2048 and 64 <= self.height <= 2048):
            raise InvalidRange(f"image size {self.width}x{self.height} outside [64, 2048]")


@dataclass(frozen=True)
class GenerationResult:
    request: GenerationRequest
    image_bytes: bytes
    elapsed: float


def _png_chunk(tag: bytes, payload: bytes) -> bytes:
    chunk = tag + payload
    return struct.pack(">I", len(payload)) + chunk + struct.pack(">I", zlib.crc32(chunk))


def solid_png(width: int, height: int, rgb: tuple[int, int, int]) -> bytes:
    """Minimal single-color RGB PNG; byte-stable (fixed zlib level)."""
    row = b"\x00" + bytes(rgb) * width
    ihdr = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    idat = zlib.compress(row * height, 9)
    return (
        _PNG_SIGNATURE
        + _png_chunk(b"IHDR", ihdr)
        + _png_chunk(b"IDAT", idat)
        + _png_chunk(b"IEND", b"")
    )


class MockEmbedder:
    """Deterministic stand-in for a contrastive vision-language encoder."""

    kind = "mock"
    dim = EMBED_DIM

    def embed_text(self, text: str) -> np.ndarray:
        if not text:
            raise ValueError("cannot embed empty text")
        return hash_expand_unit(b"text:" + text.encode("utf-8"))

    def embed_image(self, image_bytes: bytes) -> np.ndarray:
        if not image_bytes.startswith(_PNG_SIGNATURE):
            raise UndecodableImage("payload is not a PNG")
        return hash_expand_unit(b"image:" + image_bytes)


class MockGenerator:
    """Emits a solid-color PNG whose color hashes (prompt, guidance, seed)."""

    kind = "mock"

    def generate(self, request: GenerationRequest) -> GenerationResult:
        key = b"gen:" + request.prompt.encode("utf-8") + b"|" + struct.pack(
            "<dQ", request.guidance_scale, request.seed
        )
        word = splitmix64_stream(fnv1a64(key), 1)[0]
        rgb = (word & 0xFF, (word >> 8) & 0xFF, (word >> 16) & 0xFF)
        start = time.perf_counter()
        png = solid_png(request.width, request.height, rgb)
        return GenerationResult(request, png, time.perf_counter() - start)


class HttpEmbedder:
    """JSON client for a remote embedding service."""

    kind = "http"
    dim = EMBED_DIM

    def __init__(self, endpoint: str, timeout: float = 30.0):
        import httpx

        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self._client = httpx.Client(timeout=timeout)

    def _post(self, path: str, payload: dict) -> np.ndarray:
        import httpx

        try:
            resp = self._client.post(self.endpoint + path, json=payload)
            resp.raise_for_status()
        except httpx.TimeoutException as exc:
            raise BackendTimeout(f"{self.endpoint}{path}: {exc}") from exc
        except httpx.HTTPError as exc:
            raise BackendUnavailable(f"{self.endpoint}{path}: {exc}") from exc
        vec = np.asarray(resp.json()["vector"], dtype=np.float64)
        if vec.shape != (EMBED_DIM,):
            raise DimensionMismatch(f"backend returned {vec.shape}, expected ({EMBED_DIM},)")
        norm = np.linalg.norm(vec)
        if norm == 0 or not np.all(np.isfinite(vec)):
            raise BackendUnavailable("backend returned a degenerate vector")
        return (vec / norm).astype(np.float32)

    def embed_text(self, text: str) -> np.ndarray:
        if not text:
            raise ValueError("cannot embed empty text")
        return self._post("/embed_text", {"text": text})

    def embed_image(self, image_bytes: bytes) -> np.ndarray:
        if not image_bytes.startswith(_PNG_SIGNATURE):
            raise UndecodableImage("payload is not a PNG")
        payload = {"png_base64": base64.b64encode(image_bytes).decode("ascii")}
        return self._post("/embed_image", payload)


class HttpGenerator:
    """JSON client for a remote diffusion server."""

    kind = "http"

    def __init__(self, endpoint: str, timeout: float = 120.0):
        import httpx

        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self._client = httpx.Client(timeout=timeout)

    def generate(self, request: GenerationRequest) -> GenerationResult:
        import httpx

        start = time.perf_counter()
        try:
            resp = self._client.post(
                self.endpoint + "/generate",
                json={
                    "prompt": request.prompt,
                    "guidance_scale": request.guidance_scale,
                    "seed": request.seed,
                    "width": request.width,
                    "height": request.height,
                },
            )
            resp.raise_for_status()
        except httpx.TimeoutException as exc:
            raise BackendTimeout(f"{self.endpoint}/generate: {exc}") from exc
        except httpx.HTTPError as exc:
            raise BackendUnavailable(f"{self.endpoint}/generate: {exc}") from exc
        png = base64.b64decode(resp.json()["png_base64"])
        if not png.startswith(_PNG_SIGNATURE):
            raise UndecodableImage("backend returned non-PNG bytes")
        return GenerationResult(request, png, time.perf_counter() - start)


@dataclass
class Backends:
    """The embedder/generator pair a session runs against."""

    embedder: object
    generator: object
    max_in_flight: int = 4

    @property
    def is_mock(self) -> bool:
        return getattr(self.embedder, "kind", "") == "mock" and (
            getattr(self.generator, "kind", "") == "mock"
        )


def from_env(env: Optional[dict] = None) -> Backends:
    """Build backends from PM_EMBEDDER_URL / PM_GENERATOR_URL (absent -> mock)."""
    env = os.environ if env is None else env
    embedder_url = env.get(ENV_EMBEDDER_URL)
    generator_url = env.get(ENV_GENERATOR_URL)
    embedder = HttpEmbedder(embedder_url) if embedder_url else MockEmbedder()
    generator = HttpGenerator(generator_url) if generator_url else MockGenerator()
    return Backends(embedder=embedder, generator=generator)


def generate_images(
    backends: Backends,
    prompt: str,
    gs_min: float,
    gs_max: float,
    n: int,
    rng_seed: int,
    width: int = 512,
    height: int = 512,
) -> list[GenerationResult]:
    """Generate n images with sampled guidance scales and per-image seeds.

    Guidance scales are the first n uniform draws from the seeded generator
    (identical to sample_guidance with the same seed); per-image seeds are
    the next n u64 draws from the same stream.
    """
    if not (0 < gs_min <= gs_max):
        raise InvalidRange(f"need 0 < min <= max, got [{gs_min}, {gs_max}]")
    if n < 1:
        raise InvalidRange(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(rng_seed)
    scales = rng.uniform(gs_min, gs_max, size=n)
    seeds = rng.integers(0, 2**64, size=n, dtype=np.uint64)
    requests = [
        GenerationRequest(prompt, float(scales[i]), int(seeds[i]), width, height)
        for i in range(n)
    ]

    if backends.generator.kind == "mock":
        return [backends.generator.generate(req) for req in requests]

    results: list[Optional[GenerationResult]] = [None] * n
    failures: list[tuple[GenerationRequest, Exception]] = []
    with concurrent.futures.ThreadPoolExecutor(max_workers=backends.max_in_flight) as pool:
        futures = {pool.submit(backends.generator.generate, req): i for i, req in enumerate(requests)}
        for fut, i in futures.items():
            try:
                results[i] = fut.result()
            except Exception as exc:
                failures.append((requests[i], exc))
    succeeded = [r for r in results if r is not None]
    if failures and not succeeded:
        raise BackendUnavailable(f"all {n} generations failed: {failures[0][1]}")
    if failures:
        raise PartialFailure(succeeded, failures)
    return succeeded


def embed_records(backends: Backends, payloads: Sequence[bytes]) -> np.ndarray:
    """Embed a batch of PNG payloads into an (n, 512) float32 matrix."""
    if not payloads:
        return np.zeros((0, EMBED_DIM), dtype=np.float32)
    return np.stack([backends.embedder.embed_image(p) for p in payloads])
