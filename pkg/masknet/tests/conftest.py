"""Fixtures around corpora produced by the enhancement CLI.

The tiny corpus backs the unit tests; the train/eval pair and the trained
models exist for the end-to-end acceptance tests and are only built when one
of those asks. Everything goes through the public CLIs of the two packages,
never their internals, mirroring how the tools are used together.
"""

import json

import pytest
from chain_helpers import (DURATION, EVAL_SCENES, EVAL_SEED, TRAIN_SCENES,
                           TRAIN_SEED, acceptance_lines, best_output, mnet,
                           wasn)


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines():
        terminalreporter.section("learned-mask acceptance criteria")
        for line in acceptance_lines():
            terminalreporter.write_line(line)


def _generate(root, n, seed):
    wasn(["generate", "--out", root, "--config", "random", "--n", n,
          "--seed", seed, "--duration", DURATION, "--synthetic-fixtures"])


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    """Two 4-second scenes plus an oracle compressed-signal run."""
    root = tmp_path_factory.mktemp("tiny_corpus")
    wasn(["generate", "--out", root, "--config", "random", "--n", 2,
          "--seed", 2121, "--duration", 4.0, "--synthetic-fixtures"])
    wasn(["enhance", "--corpus", root, "--run", "zboth",
          "--mask-provider", "oracle", "--mask-policy", "local",
          "--compressed", "both", "--steps", "1", "--workers", 2])
    return root


@pytest.fixture(scope="session")
def train_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("train_corpus")
    _generate(root, TRAIN_SCENES, TRAIN_SEED)
    wasn(["enhance", "--corpus", root, "--run", "zstep",
          "--mask-provider", "oracle", "--mask-policy", "local",
          "--compressed", "both", "--steps", "1", "--workers", 4])
    return root


@pytest.fixture(scope="session")
def eval_corpus(tmp_path_factory):
    """Held-out scenes with the oracle-mask run as the reference point."""
    root = tmp_path_factory.mktemp("eval_corpus")
    _generate(root, EVAL_SCENES, EVAL_SEED)
    wasn(["enhance", "--corpus", root, "--run", "oracle",
          "--mask-provider", "oracle", "--mask-policy", "local", "--workers", 4])
    wasn(["evaluate", "--corpus", root, "--run", "oracle", "--workers", 4])
    return root


def _fit(tmp_path_factory, train_corpus, name, recipe, z_run=None):
    out = tmp_path_factory.mktemp(f"{name}_model")
    manifest = {"corpus": str(train_corpus), "out": str(out), "recipe": recipe,
                "seed": 1, "epochs": 8, "patience": 2, "lr": 1e-3,
                "batch_size": 64, "stride": 8, "val_fraction": 0.2}
    if z_run:
        manifest["z_run"] = z_run
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest))
    mnet(["train", "--manifest", path])
    return out / "model.pt"


@pytest.fixture(scope="session")
def sn_model(tmp_path_factory, train_corpus):
    return _fit(tmp_path_factory, train_corpus, "sn", "single")


@pytest.fixture(scope="session")
def mn_model(tmp_path_factory, train_corpus):
    return _fit(tmp_path_factory, train_corpus, "mn", "multi_target", "zstep")


@pytest.fixture(scope="session")
def sn_run(tmp_path_factory, eval_corpus, sn_model):
    """Single-node masks driving both filter steps on the held-out corpus."""
    masks = tmp_path_factory.mktemp("masks_sn")
    mnet(["infer", "--model", sn_model, "--corpus", eval_corpus,
          "--out", masks, "--steps", "1,2"])
    wasn(["enhance", "--corpus", eval_corpus, "--run", "sn",
          "--mask-provider", f"dir:{masks}", "--mask-policy", "local",
          "--workers", 4])
    wasn(["evaluate", "--corpus", eval_corpus, "--run", "sn", "--workers", 4])
    return {"masks": masks, "summary": best_output(eval_corpus, "sn")}


@pytest.fixture(scope="session")
def mn_run(tmp_path_factory, eval_corpus, mn_model, sn_run):
    """Step 1 from the single-node model, step 2 from the multi-node model.

    The multi-node inputs are the compressed signals the single-node masks
    actually produce, so this run is the deployable two-model chain. Step-1
    masks are byte copies from the single-node run, making the two runs
    differ in nothing but the step-2 mask source.
    """
    wasn(["enhance", "--corpus", eval_corpus, "--run", "sn_z",
          "--mask-provider", f"dir:{sn_run['masks']}", "--mask-policy", "local",
          "--steps", "1", "--workers", 4])
    masks = tmp_path_factory.mktemp("masks_mn")
    for step1 in sn_run["masks"].glob("*/node?_step1.msk"):
        target = masks / step1.parent.name / step1.name
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(step1.read_bytes())
    mnet(["infer", "--model", mn_model, "--corpus", eval_corpus,
          "--out", masks, "--steps", "2", "--z-run", "sn_z"])
    wasn(["enhance", "--corpus", eval_corpus, "--run", "mn",
          "--mask-provider", f"dir:{masks}", "--mask-policy", "local",
          "--workers", 4])
    wasn(["evaluate", "--corpus", eval_corpus, "--run", "mn", "--workers", 4])
    return {"masks": masks, "summary": best_output(eval_corpus, "mn")}
