import numpy as np
import pytest

from promptmap.backends import Backends, MockEmbedder, MockGenerator
from promptmap.corpus import CorpusHandle, PromptImageRecord
from promptmap.testkit import SyntheticCorpusSpec, make_blobs


def blob_corpus(n=30, blobs=3, seed=1, spread=0.2):
    """A corpus whose image features form separable blobs with per-blob
    prompt vocabulary; guidance scales and seeds are deterministic."""
    spec = SyntheticCorpusSpec(n_records=n, n_blobs=blobs, dim=512, spread=spread)
    image, labels, prompts = make_blobs(spec, seed)
    text, _, _ = make_blobs(spec, seed + 100)
    rng = np.random.default_rng(seed + 200)
    scales = rng.uniform(5.0, 15.0, size=n)
    records = [
        PromptImageRecord(
            id=f"db{i:04d}",
            prompt=prompts[i],
            image_ref=f"images/db{i:04d}.png",
            guidance_scale=float(scales[i]),
            seed=int(i),
            source="db",
            row=i,
        )
        for i in range(n)
    ]
    return CorpusHandle(records, text, image), labels


@pytest.fixture
def mock_backends():
    return Backends(MockEmbedder(), MockGenerator())


@pytest.fixture
def small_corpus():
    return blob_corpus()[0]
