"""Shared test fixtures and record-building helpers."""

import pytest

from mixlab.mixtures import MixtureWeights
from mixlab.records import BenchmarkSpec, PerformanceRecord


@pytest.fixture
def two_bench_suite():
    """Minimal suite with one in-benchmark and one out-benchmark, count 1 each.

    With single-member groups the aggregate equals the raw score, so records
    built with make_record carry exact In/Out scores.
    """
    return [BenchmarkSpec("bin", 1, "in"), BenchmarkSpec("bout", 1, "out")]


def make_record(rid, labels, m, in_score, out_score, step=None):
    """A record with uniform weights over ``labels`` and given In/Out scores."""
    weights = [0.0] * m
    for label in labels:
        weights[label - 1] = 1.0 / len(labels)
    return PerformanceRecord(
        id=rid,
        datasets=tuple(sorted(labels)),
        weights=MixtureWeights(tuple(weights)),
        scores={"bin": in_score, "bout": out_score},
        step=step,
    )
