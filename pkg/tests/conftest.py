"""Shared fixtures: synthetic corpora written once per test session."""

import json
import shutil
from dataclasses import dataclass
from pathlib import Path

import pytest

import pbcount as pc


@dataclass(frozen=True)
class CorpusHandle:
    dir: Path
    manifest: Path
    records: list
    registry: dict


def _build_corpus(tmp_path_factory, cfg: pc.GeneratorConfig, name: str) -> CorpusHandle:
    out = tmp_path_factory.mktemp(name)
    paths = pc.write_corpus(cfg, out)
    registry = json.loads(Path(paths["registry"]).read_text(encoding="utf-8"))
    return CorpusHandle(
        dir=Path(paths["dir"]),
        manifest=Path(paths["manifest"]),
        records=pc.read_manifest(paths["manifest"]),
        registry=registry,
    )


@pytest.fixture(scope="session")
def standard_corpus(tmp_path_factory):
    """The default generator population: n=1000, seed 5, shape 32x64x64."""
    handle = _build_corpus(tmp_path_factory, pc.GeneratorConfig(), "corpus_std")
    yield handle
    shutil.rmtree(handle.dir, ignore_errors=True)


@pytest.fixture(scope="session")
def seed11_corpus(tmp_path_factory):
    """A smaller independent population for metric trend tests."""
    cfg = pc.GeneratorConfig(n_samples=200, seed=11)
    handle = _build_corpus(tmp_path_factory, cfg, "corpus_s11")
    yield handle
    shutil.rmtree(handle.dir, ignore_errors=True)


@pytest.fixture()
def two_blob():
    return pc.two_blob_demo_volume()
