"""
tests/test_repository.py

Chargeurs CSV (schéma Microlending), résolution de la compatibilité,
écrivains et aller-retour d'un jeu généré.
"""

import tempfile
import unittest
from pathlib import Path

from fairrank.config import GenSpec, RegimeSpec
from fairrank.datagen import generate
from fairrank.exceptions import ConfigError, DataLoadError, ValidationError
from fairrank.models import AgentSpec
from fairrank.repository import (
    AGENT_KEY,
    FEATURE_KEY,
    CompatibilityTable,
    compatibility_key,
    load_compatibilities,
    load_ingested_dataset,
    load_item_features,
    load_rating_profiles,
    load_recommendations,
    write_compatibilities,
    write_item_features,
    write_recommendations,
)

TOY = Path(__file__).resolve().parents[1] / "data" / "toy"
TOY_AGENTS = (AgentSpec("country", "country", 0.2, 0.3), AgentSpec("loan_size", "loan_size", 0.3, 0.6))


class FileTestCase(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def write(self, name, text):
        path = self.tmp / name
        path.write_text(text, encoding="utf-8")
        return str(path)


class TestLoadRecommendations(FileTestCase):
    def test_sorted_by_score(self):
        path = self.write("r.csv", "user_id,item_id,score\nu1,a,1.0\nu1,b,2.0\nu2,a,0.5\n")
        recs = load_recommendations(path)
        self.assertEqual(recs["u1"].item_ids, ("b", "a"))
        self.assertEqual(len(recs["u2"]), 1)

    def test_duplicate_pair_reports_line(self):
        path = self.write("r.csv", "user_id,item_id,score\nu1,a,1.0\nu1,a,2.0\n")
        with self.assertRaises(DataLoadError) as cm:
            load_recommendations(path)
        self.assertIn("ligne 3", str(cm.exception))

    def test_non_numeric_score(self):
        path = self.write("r.csv", "user_id,item_id,score\nu1,a,high\n")
        with self.assertRaises(DataLoadError) as cm:
            load_recommendations(path)
        self.assertIn("r.csv, ligne 2", str(cm.exception))

    def test_bad_header(self):
        path = self.write("r.csv", "user,item,score\nu1,a,1.0\n")
        with self.assertRaises(DataLoadError):
            load_recommendations(path)

    def test_missing_file(self):
        with self.assertRaises(ValidationError):
            load_recommendations(str(self.tmp / "absent.csv"))


class TestLoadItemFeatures(FileTestCase):
    def test_flags(self):
        path = self.write("f.csv", "item_id,country,loan_size\nl1,1,0\nl2,0,1\n")
        table = load_item_features(path, ["country"])
        self.assertEqual(table.flags, {"l1": {"country": True}, "l2": {"country": False}})

    def test_agent_feature_absent_is_config_error(self):
        path = self.write("f.csv", "item_id,country\nl1,1\n")
        with self.assertRaises(ConfigError):
            load_item_features(path, ["loan_size"])

    def test_non_binary_cell(self):
        path = self.write("f.csv", "item_id,country\nl1,yes\n")
        with self.assertRaises(DataLoadError):
            load_item_features(path, ["country"])

    def test_missing_items_are_unprotected(self):
        path = self.write("f.csv", "item_id,country\nl1,1\n")
        table = load_item_features(path, ["country"])
        with self.assertLogs("fairrank.repository", level="WARNING"):
            flags = table.resolve(["l1", "l9"])
        self.assertEqual(flags["l9"], {"country": False})
        self.assertEqual(table.missing, 1)


class TestCompatibilities(FileTestCase):
    def test_slightly_out_of_range_is_clamped(self):
        path = self.write("c.csv", "user_id,agent_name,score\nu1,a,1.0000001\nu2,a,-0.001\n")
        compat = load_compatibilities(path)
        self.assertEqual(compat[("u1", "a")], 1.0)
        self.assertEqual(compat[("u2", "a")], 0.0)

    def test_far_out_of_range_rejected(self):
        path = self.write("c.csv", "user_id,agent_name,score\nu1,a,1.5\n")
        with self.assertRaises(DataLoadError):
            load_compatibilities(path)

    def test_lookup_order(self):
        spec = AgentSpec("agent", "f", 0.5)
        table = CompatibilityTable(
            explicit={("u1", "agent"): 0.7, ("u2", "f"): 0.3},
            profiles={"u3": [("p", 1.0), ("x", 1.0)]},
            flags={"p": {"f": True}, "x": {"f": False}},
        )
        self.assertEqual(table.lookup("u1", spec), 0.7)
        self.assertAlmostEqual(table.lookup("u3", spec), 1.0, places=12)
        with self.assertLogs("fairrank.repository", level="WARNING"):
            # indexé par nom d'agent : la ligne (u2, f) ne concerne pas cet agent
            self.assertEqual(table.lookup("u2", spec), 0.5)
        self.assertEqual(table.fallbacks, 1)

    def test_lookup_by_feature(self):
        table = CompatibilityTable(explicit={("u1", "f"): 0.3, ("u1", "agent"): 0.9}, key=FEATURE_KEY)
        self.assertEqual(table.lookup("u1", AgentSpec("agent", "f", 0.5)), 0.3)

    def test_unknown_key_rejected(self):
        with self.assertRaises(ConfigError):
            CompatibilityTable(key="user")

    def test_key_detection(self):
        agents = (AgentSpec("a1", "f1", 0.5), AgentSpec("a2", "f2", 0.5))
        self.assertEqual(compatibility_key({("u", "a1"): 0.1}, agents, ("f1", "f2")), AGENT_KEY)
        self.assertEqual(compatibility_key({("u", "f2"): 0.1}, agents, ("f1", "f2")), FEATURE_KEY)
        self.assertEqual(compatibility_key({}, agents, ("f1", "f2")), AGENT_KEY)
        with self.assertLogs("fairrank.repository", level="WARNING"):
            self.assertEqual(compatibility_key({("u", "zz"): 0.1}, agents, ("f1", "f2")), AGENT_KEY)

    def test_agent_named_like_another_feature(self):
        recs = self.write("r.csv", "user_id,item_id,score\nu1,i1,1.0\n")
        feats = self.write("f.csv", "item_id,feature_0,feature_1\ni1,1,0\n")
        comps = self.write("c.csv", "user_id,agent_name,score\nu1,feature_0,0.2\nu1,feature_1,0.9\n")
        agents = (AgentSpec("feature_1", "feature_0", 0.5), AgentSpec("agent_x", "feature_1", 0.5))
        dataset = load_ingested_dataset(recs, feats, agents, compatibilities=comps)
        self.assertEqual(dataset.compatibility("u1", agents[0]), 0.2)
        self.assertEqual(dataset.compatibility("u1", agents[1]), 0.9)

    def test_rating_profiles(self):
        path = self.write("p.csv", "user_id,item_id,rating\nu1,a,4\nu1,b,5\n")
        self.assertEqual(load_rating_profiles(path), {"u1": [("a", 4.0), ("b", 5.0)]})


class TestToyFixture(unittest.TestCase):
    def setUp(self):
        self.dataset = load_ingested_dataset(
            str(TOY / "recommendations.csv"),
            str(TOY / "item_features.csv"),
            TOY_AGENTS,
            compatibilities=str(TOY / "compatibilities.csv"),
            ratings=str(TOY / "ratings.csv"),
        )
        self.country, self.loan = TOY_AGENTS

    def test_users_and_order(self):
        self.assertEqual([a.user_id for a in self.dataset.arrivals], ["u1", "u2", "u3", "u4", "u5", "u6"])
        self.assertEqual(self.dataset.recommendations["u3"].item_ids[0], "l09")

    def test_explicit_compatibility(self):
        self.assertEqual(self.dataset.compatibility("u1", self.country), 0.7)
        self.assertEqual(self.dataset.compatibility("u2", self.loan), 1.0)

    def test_entropy_from_ratings(self):
        self.assertAlmostEqual(self.dataset.compatibility("u4", self.country), 0.8113, places=4)
        self.assertEqual(self.dataset.compatibility("u5", self.country), 0.0)
        self.assertAlmostEqual(self.dataset.compatibility("u5", self.loan), 1.0, places=12)

    def test_neutral_fallback(self):
        with self.assertLogs("fairrank.repository", level="WARNING"):
            self.assertEqual(self.dataset.compatibility("u6", self.country), 0.5)

    def test_flags(self):
        self.assertTrue(self.dataset.item_flags["l05"]["loan_size"])
        self.assertFalse(self.dataset.item_flags["l01"]["country"])


class TestRoundTrip(FileTestCase):
    def test_generated_dataset_reloads(self):
        spec = GenSpec(
            n_items=200,
            m=40,
            m_prime=10,
            seed=5,
            regimes=(RegimeSpec("r", 8, (0.5, 0.6, 0.0), (0.06, 0.08, 1.0)),),
        )
        data = generate(spec)
        recs, feats, comps = (str(self.tmp / n) for n in ("r.csv", "f.csv", "c.csv"))
        rows = write_recommendations(recs, data.recommendations)
        write_item_features(feats, data.catalog.flags, spec.feature_names)
        write_compatibilities(comps, data.compatibilities())
        self.assertEqual(rows, 80)

        agents = (AgentSpec("agent_0", "feature_0", 0.25), AgentSpec("agent_1", "feature_1", 0.25))
        with self.assertNoLogs("fairrank.repository", level="WARNING"):
            loaded = load_ingested_dataset(recs, feats, agents, compatibilities=comps)
            for user in data.users:
                self.assertEqual(
                    loaded.compatibility(user, agents[0]), data.compatibilities()[(user, "feature_0")]
                )
        self.assertEqual(loaded.recommendations, data.recommendations)
        self.assertEqual([a.user_id for a in loaded.arrivals], list(data.recommendations))


if __name__ == "__main__":
    unittest.main()
