"""
tests/test_datagen.py

Générateur synthétique : tirages utilisateurs / items, listes du
recommandeur, séquencement des régimes, reproductibilité.
"""

import unittest

import numpy as np

from fairrank.config import GenSpec, RegimeSpec
from fairrank.datagen import (
    gen_catalog,
    gen_item,
    gen_recommendations,
    gen_user,
    generate,
    item_ids_for,
    sequence_arrivals,
)
from fairrank.exceptions import ConfigError, ValidationError
from fairrank.models import AgentSpec, Item


def small_spec(**overrides):
    params = dict(
        n_items=300,
        m=60,
        m_prime=20,
        seed=11,
        regimes=(
            RegimeSpec("A", 2, (0.9, 0.1, 0.0), (0.05, 0.05, 1.0)),
            RegimeSpec("B", 2, (0.1, 0.9, 0.0), (0.05, 0.05, 1.0)),
            RegimeSpec("C", 2, (0.3, 0.3, 0.0), (0.1, 0.1, 1.0)),
        ),
    )
    params.update(overrides)
    return GenSpec(**params)


class TestUsers(unittest.TestCase):
    def test_zero_variance_user(self):
        regime = RegimeSpec("r", 1, (0.5, 0.6, 0.0), (0.0, 0.0, 0.0))
        propensities, latent = gen_user(regime, np.random.default_rng(1), 0.0)
        np.testing.assert_array_equal(propensities, [0.5, 0.6, 0.0])
        np.testing.assert_array_equal(latent, [0.5, 0.6, 0.0])

    def test_propensity_means(self):
        regime = RegimeSpec("r", 1, (0.5, 0.6, 0.0), (0.06, 0.08, 1.0))
        rng = np.random.default_rng(7)
        draws = np.array([gen_user(regime, rng, 1.0)[0] for _ in range(10_000)])
        means = draws.mean(axis=0)
        # 3 erreurs-types
        self.assertAlmostEqual(means[0], 0.5, delta=3 * 0.06 / 100)
        self.assertAlmostEqual(means[1], 0.6, delta=3 * 0.08 / 100)
        self.assertAlmostEqual(means[2], 0.0, delta=3 * 1.0 / 100)

    def test_default_dataset_propensity_means(self):
        data = generate(GenSpec())
        props = np.array([u.propensities for u in data.users.values()])
        self.assertEqual(len(props), 500)
        self.assertAlmostEqual(props[:, 0].mean(), 0.5, delta=3 * 0.06 / np.sqrt(500))
        self.assertAlmostEqual(props[:, 1].mean(), 0.6, delta=3 * 0.08 / np.sqrt(500))
        for name, p in (("feature_0", 0.039), ("feature_1", 0.05)):
            sigma = np.sqrt(p * (1 - p) / 5000)
            self.assertAlmostEqual(data.catalog.prevalence(name), p, delta=3 * sigma)


class TestItems(unittest.TestCase):
    def test_never_protected(self):
        spec = GenSpec(item_probabilities=(0.0, 0.05, 0.9), n_items=500, m=100, m_prime=10)
        catalog = gen_catalog(spec, np.random.default_rng(0))
        self.assertEqual(catalog.prevalence("feature_0"), 0.0)

    def test_exact_binary_items(self):
        spec = GenSpec(exact_binary_items=True, n_items=500, m=100, m_prime=10)
        rng = np.random.default_rng(4)
        for _ in range(50):
            propensities, factors = gen_item(spec, rng)
            np.testing.assert_array_equal(factors, propensities.astype(float))
            self.assertTrue(set(propensities.tolist()) <= {0, 1})

    def test_items_carry_protected_flags(self):
        catalog = gen_catalog(small_spec(), np.random.default_rng(2))
        items = catalog.items
        self.assertEqual(len(items), 300)
        for j, item in enumerate(items):
            self.assertIsInstance(item, Item)
            self.assertEqual(item.id, catalog.item_ids[j])
            self.assertEqual(item.is_protected("feature_0"), bool(catalog.propensities[j, 0]))
            self.assertEqual(catalog.flags[item.id]["feature_1"], bool(catalog.propensities[j, 1]))

    def test_item_ids_sort_numerically(self):
        ids = item_ids_for(12)
        self.assertEqual(list(ids), sorted(ids))
        self.assertEqual(ids[0], "i00")


class TestRecommendations(unittest.TestCase):
    def test_single_factor_example(self):
        items = np.array([[1.0], [3.0], [-1.0]])
        out = gen_recommendations(
            np.array([2.0]), items, 3, 2, np.random.default_rng(0), ("item1", "item2", "item3")
        )
        self.assertEqual(out.item_ids, ("item2", "item1"))
        self.assertEqual([s for _, s in out], [6.0, 2.0])

    def test_zero_user_vector_ties_by_id(self):
        items = np.random.default_rng(1).normal(size=(3, 2))
        out = gen_recommendations(np.zeros(2), items, 3, 3, np.random.default_rng(2))
        self.assertEqual(out.item_ids, ("i0", "i1", "i2"))

    def test_full_catalog(self):
        items = np.random.default_rng(1).normal(size=(30, 3))
        out = gen_recommendations(np.ones(3), items, 30, 30, np.random.default_rng(2))
        self.assertEqual(len(out), 30)
        scores = [s for _, s in out]
        self.assertEqual(scores, sorted(scores, reverse=True))

    def test_sampling_is_uniform(self):
        n_items, m, draws = 50, 10, 3000
        items = np.random.default_rng(3).normal(size=(n_items, 3))
        rng = np.random.default_rng(4)
        counts = np.zeros(n_items)
        for _ in range(draws):
            out = gen_recommendations(np.ones(3), items, m, m, rng)
            counts[[int(i[1:]) for i in out.item_ids]] += 1
        expected = draws * m / n_items
        chi2 = float(((counts - expected) ** 2 / expected).sum())
        df = n_items - 1
        self.assertLess(chi2, df + 3 * np.sqrt(2 * df))

    def test_zero_propensity_users_see_catalog_prevalence(self):
        spec = GenSpec(n_items=5000, item_probabilities=(0.2, 0.3, 0.9), m=200, m_prime=50, seed=21)
        catalog = generate(spec).catalog
        rng = np.random.default_rng(22)
        seen = []
        for _ in range(400):
            # propensions protégées nulles : seul le facteur libre classe les items
            latent = np.array([0.0, 0.0, rng.normal()])
            seen.extend(gen_recommendations(latent, catalog.factors, spec.m, spec.m_prime, rng, catalog.item_ids).item_ids)
        flags = catalog.flags
        for name in ("feature_0", "feature_1"):
            in_lists = np.mean([flags[i][name] for i in seen])
            self.assertAlmostEqual(in_lists, catalog.prevalence(name), delta=0.03)

    def test_inconsistent_sizes(self):
        with self.assertRaises(ValidationError):
            gen_recommendations(np.ones(1), np.ones((5, 1)), 3, 4, np.random.default_rng(0))

    def test_m_prime_above_m_is_config_error(self):
        with self.assertRaises(ConfigError):
            GenSpec(n_items=100, m=10, m_prime=20)


class TestSequencing(unittest.TestCase):
    def test_block_order(self):
        spec = small_spec()
        arrivals = sequence_arrivals(spec, ("B", "A", "C"), np.random.default_rng(0))
        self.assertEqual([a.regime for a in arrivals], ["B", "B", "A", "A", "C", "C"])
        self.assertEqual([a.user_id for a in arrivals[:2]], ["u2", "u3"])

    def test_mixed_is_seeded_permutation(self):
        spec = small_spec()
        first = sequence_arrivals(spec, "mixed", np.random.default_rng(9))
        second = sequence_arrivals(spec, "mixed", np.random.default_rng(9))
        self.assertEqual(first, second)
        self.assertEqual(sorted(a.user_id for a in first), [f"u{n}" for n in range(6)])

    def test_unknown_regime(self):
        with self.assertRaises(ConfigError):
            generate(small_spec(), order=("A", "Z"))


class TestGenerate(unittest.TestCase):
    def test_same_seed_same_dataset(self):
        first, second = generate(small_spec()), generate(small_spec())
        self.assertEqual(first.recommendations, second.recommendations)
        self.assertEqual(first.arrivals, second.arrivals)
        np.testing.assert_array_equal(first.catalog.factors, second.catalog.factors)

    def test_other_seed_other_dataset(self):
        self.assertNotEqual(
            generate(small_spec()).recommendations, generate(small_spec(seed=12)).recommendations
        )

    def test_reordering_keeps_users(self):
        base = generate(small_spec())
        reordered = generate(small_spec(), order=("C", "B", "A"))
        self.assertEqual(base.recommendations, reordered.recommendations)
        self.assertEqual(reordered.arrivals[0].regime, "C")

    def test_dataset_conversion(self):
        data = generate(small_spec())
        dataset = data.to_dataset()
        self.assertEqual(len(dataset.arrivals), 6)
        self.assertTrue(all(len(r) == 20 for r in dataset.recommendations.values()))
        user = data.users["u0"]
        compat = dataset.compatibility("u0", AgentSpec("x", "feature_0", 0.2))
        self.assertEqual(compat, min(1.0, max(0.0, float(user.propensities[0]))))


if __name__ == "__main__":
    unittest.main()
