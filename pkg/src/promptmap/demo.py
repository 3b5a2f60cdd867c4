"""Desk-scale synthetic corpus builder for demos and UI fixtures."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ._hashing import fnv1a64, splitmix64_stream
from .backends import solid_png
from .corpus import CorpusHandle, PromptImageRecord, write_corpus
from .testkit import SyntheticCorpusSpec, make_blobs


def make_demo_corpus(
    out_dir,
    n_records: int = 60,
    n_blobs: int = 3,
    seed: int = 7,
    spread: float = 0.25,
    with_images: bool = True,
) -> CorpusHandle:
    """Write a ready-to-serve index directory and return its handle.

    Text and image features are separate vMF-style blob draws over the same
    blob assignment, so retrieved neighborhoods cluster both visually and
    by prompt vocabulary.
    """
    out_dir = Path(out_dir)
    spec = SyntheticCorpusSpec(n_records=n_records, n_blobs=n_blobs, spread=spread)
    image_feats, labels, prompts = make_blobs(spec, seed)
    text_feats, _, _ = make_blobs(spec, seed + 1)

    rng = np.random.default_rng(seed + 2)
    scales = rng.uniform(5.0, 15.0, size=n_records)
    seeds = rng.integers(0, 2**63, size=n_records)

    records = []
    for i in range(n_records):
        rid = f"db{i:04d}"
        records.append(
            PromptImageRecord(
                id=rid,
                prompt=prompts[i],
                image_ref=f"images/{rid}.png",
                guidance_scale=float(round(scales[i], 3)),
                seed=int(seeds[i]),
                source="db",
                row=i,
            )
        )
    handle = CorpusHandle(records, text_feats, image_feats)
    write_corpus(handle, out_dir)

    if with_images:
        images = out_dir / "images"
        images.mkdir(exist_ok=True)
        for rec in records:
            word = splitmix64_stream(fnv1a64(rec.id.encode()), 1)[0]
            rgb = (word & 0xFF, (word >> 8) & 0xFF, (word >> 16) & 0xFF)
            (images / f"{rec.id}.png").write_bytes(solid_png(64, 64, rgb))
    return handle
