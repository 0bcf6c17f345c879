"""Shared fixtures: the 50-scene desk corpus and the oracle runs on it.

Building the corpus takes a couple of minutes single-threaded, so it is
session-scoped and only materialised when a test actually asks for it.
"""

import json
import time

import pytest
from desk_helpers import (DESK_DURATION, DESK_SCENES, DESK_SEED,
                          acceptance_lines, run_cli)

from wasnlab.layout import run_manifest, summary_json


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines():
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines():
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def desk_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("desk_corpus")
    t0 = time.perf_counter()
    run_cli(["generate", "--out", root, "--config", "random",
             "--n", DESK_SCENES, "--seed", DESK_SEED,
             "--duration", DESK_DURATION, "--synthetic-fixtures"])
    return {"root": root, "generate_s": time.perf_counter() - t0}


def _enhance_and_evaluate(root, run, policy, workers):
    run_cli(["enhance", "--corpus", root, "--run", run,
             "--mask-provider", "oracle", "--mask-policy", policy,
             "--compressed", "target", "--mu", "1.0", "--workers", workers])
    run_cli(["evaluate", "--corpus", root, "--run", run, "--workers", workers])


@pytest.fixture(scope="session")
def oracle_local_run(desk_corpus):
    root = desk_corpus["root"]
    t0 = time.perf_counter()
    _enhance_and_evaluate(root, "oracle_local", "local", 1)
    elapsed = time.perf_counter() - t0
    return {
        "root": root,
        "run": "oracle_local",
        # generate + enhance + evaluate, all with --workers 1
        "single_thread_s": desk_corpus["generate_s"] + elapsed,
        "summary": json.loads(summary_json(root, "oracle_local").read_text()),
        "manifest": json.loads(run_manifest(root, "oracle_local").read_text()),
    }


@pytest.fixture(scope="session")
def oracle_distant_run(desk_corpus):
    root = desk_corpus["root"]
    _enhance_and_evaluate(root, "oracle_distant", "distant", 4)
    return {
        "root": root,
        "run": "oracle_distant",
        "summary": json.loads(summary_json(root, "oracle_distant").read_text()),
        "manifest": json.loads(run_manifest(root, "oracle_distant").read_text()),
    }
