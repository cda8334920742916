"""Surrogate fitness: hand values, purity, noise mixing, profiles."""

from __future__ import annotations

import pytest

from archon.datasets import (BUILTIN_PROFILES, DatasetRegistry, graph_profile,
                             profile_from_files)
from archon.errors import EvalError, UnknownDatasetError
from archon.genotype import ArchGenotype, default_space, sample
from archon.rng import SplitMix64
from archon.surrogate import surrogate_fitness

from .conftest import DATASETS

EX1 = ArchGenotype(("gcn", "gcn"), 64, "relu", 0.5, frozenset({(0, 2)}), "none",
                   0.005, 0.0005, 200)
EX3 = ArchGenotype(("linear",), 16, "relu", 0.0, frozenset(), "none",
                   0.01, 0.0005, 200)


class TestProfiles:
    def test_toy_cora_fixture_values(self):
        profile = graph_profile("toy-cora")
        assert profile.kind == "homophilous-node"
        assert profile.homophily_estimate == 0.81

    def test_unknown_dataset(self):
        with pytest.raises(UnknownDatasetError):
            graph_profile("no-such-dataset")

    def test_profiles_identical_across_calls(self):
        assert graph_profile("toy-actor") is graph_profile("toy-actor")

    @pytest.mark.parametrize("name,kind", [
        ("toy-cora", "homophilous-node"),
        ("toy-actor", "heterophilous-node"),
        ("toy-mol", "graph-molecule"),
    ])
    def test_frozen_profiles_match_shipped_files(self, name, kind):
        """Recompute each registry profile from the fixture files."""
        computed = profile_from_files(name, kind, DATASETS / name)
        assert computed == BUILTIN_PROFILES[name]

    def test_manifest_registry(self):
        registry = DatasetRegistry.from_manifest(DATASETS / "registry.json")
        assert registry.graph_profile("toy-mol").num_edges == 260


class TestHandValues:
    def test_homophilous_two_gcn_is_080(self):
        assert surrogate_fitness(EX1, graph_profile("toy-cora"), (), 0.0) == 0.80

    def test_helpful_directive_adds_001(self):
        got = surrogate_fitness(EX1, graph_profile("toy-cora"),
                                ("normalize-features",), 0.0)
        assert got == 0.81

    def test_heterophilous_linear_is_0285(self):
        assert surrogate_fitness(EX3, graph_profile("toy-actor"), (), 0.0) == 0.285

    def test_feature_term_capped(self):
        profile = graph_profile("toy-actor")
        base = surrogate_fitness(EX3, profile, (), 0.0)
        stacked = surrogate_fitness(
            EX3, profile, ("row-normalize-adjacency", "add-degree-feature",
                           "normalize-features"), 0.0)
        assert stacked - base == pytest.approx(0.02, abs=1e-12)

    def test_depth_penalty(self):
        deep = ArchGenotype(("gcn",) * 6, 64, "relu", 0.5, frozenset(), "none",
                            0.005, 0.0005, 200)
        shallow = ArchGenotype(("gcn",) * 4, 64, "relu", 0.5, frozenset(), "none",
                               0.005, 0.0005, 200)
        profile = graph_profile("toy-cora")
        assert surrogate_fitness(shallow, profile, (), 0.0) - \
               surrogate_fitness(deep, profile, (), 0.0) == pytest.approx(0.04, abs=1e-12)

    def test_molecule_without_pooling_invalid(self):
        with pytest.raises(EvalError) as excinfo:
            surrogate_fitness(EX1, graph_profile("toy-mol"), (), 0.0)
        assert excinfo.value.reason == "invalid"

    def test_molecule_with_pooling_scores(self):
        g = ArchGenotype(("gin", "gin"), 64, "relu", 0.5, frozenset(), "mean",
                         0.005, 0.0005, 200)
        # 0.60 + 0.05 + 0.02 + 0.01 = 0.68
        assert surrogate_fitness(g, graph_profile("toy-mol"), (), 0.0) == 0.68


class TestDeterminismAndNoise:
    def test_bit_identical_across_calls(self):
        profile = graph_profile("toy-cora")
        rng = SplitMix64(55)
        space = default_space("node-classification")
        for _ in range(100):
            g = sample(space, rng)
            a = surrogate_fitness(g, profile, ("self-loops",), 0.37, seed=3)
            b = surrogate_fitness(g, profile, ("self-loops",), 0.37, seed=3)
            assert a == b

    def test_noise_mixes_seed_into_hash(self):
        profile = graph_profile("toy-cora")
        a = surrogate_fitness(EX1, profile, (), 0.5, seed=1)
        b = surrogate_fitness(EX1, profile, (), 0.5, seed=2)
        assert a != b

    def test_zero_noise_ignores_seed(self):
        profile = graph_profile("toy-cora")
        assert surrogate_fitness(EX1, profile, (), 0.0, seed=1) == \
               surrogate_fitness(EX1, profile, (), 0.0, seed=2)

    def test_range_clamped(self):
        profile = graph_profile("toy-cora")
        rng = SplitMix64(12)
        space = default_space("node-classification")
        for i in range(2000):
            g = sample(space, rng)
            value = surrogate_fitness(g, profile, (), 3.0, seed=i)
            assert 0.0 <= value <= 1.0
