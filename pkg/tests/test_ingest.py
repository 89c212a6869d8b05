import os

import numpy as np
import pytest

from recparity.dataset import minority_ratio
from recparity.harness.ingest import ingest_movielens
from recparity.io import write_idmaps

ML_RATINGS = os.environ.get("ML1M_RATINGS", "/data/ml-1m/ratings.dat")
ML_USERS = os.environ.get("ML1M_USERS", "/data/ml-1m/users.dat")


def write_movielens(tmp_path, ratings, users):
    rpath = tmp_path / "ratings.dat"
    upath = tmp_path / "users.dat"
    rpath.write_text("\n".join(ratings) + "\n")
    upath.write_text("\n".join(users) + "\n")
    return str(rpath), str(upath)


def toy_files(tmp_path):
    ratings = [
        "1::10::5::978300760",
        "1::11::3::978300761",
        "2::10::4::978300762",
        "3::11::2::978300763",
        "3::12::5::978300764",
    ]
    users = [
        "1::F::1::10::48067",
        "2::M::25::16::70072",
        "3::M::45::15::55117",
        "4::F::50::7::02460",  # no ratings: ignored
    ]
    return write_movielens(tmp_path, ratings, users)


class TestGenderIngest:
    def test_toy_exact_parse(self, tmp_path):
        rpath, upath = toy_files(tmp_path)
        result = ingest_movielens(rpath, upath, "gender")
        ds = result.dataset
        assert ds.n_users == 3 and ds.n_items == 3
        assert len(ds) == 5
        # user 1 (dense 0) is the lone F -> minority label 1
        assert ds.demographic[0] == 1
        assert result.minority_ratio == pytest.approx(1 / 3)
        assert result.rule["label_1_value"] == "F"

    def test_min_rating_filter(self, tmp_path):
        rpath, upath = toy_files(tmp_path)
        result = ingest_movielens(rpath, upath, "gender", min_rating=4.0)
        assert len(result.dataset) == 3
        assert result.rule["min_rating"] == 4.0

    def test_gender_flip_when_f_majority(self, tmp_path):
        ratings = [f"{u}::10::5::1" for u in range(1, 6)]
        users = [f"{u}::F::25::0::00000" for u in range(1, 5)]
        users.append("5::M::25::0::00000")
        rpath, upath = write_movielens(tmp_path, ratings, users)
        result = ingest_movielens(rpath, upath, "gender")
        assert result.rule["label_1_value"] == "M"
        assert result.minority_ratio == pytest.approx(0.2)


class TestAgeIngest:
    def test_threshold_discovery(self, tmp_path):
        # ages: three 18s, three 25s, two 45s, two 56s -> the boundary whose
        # smaller side is closest to 23.6% is >= 45 at 4/10 = 0.4? no:
        # candidates: >=25 (7/10 high, min 0.3), >=45 (0.4), >=56 (0.2)
        # gaps from 0.236: 0.064, 0.164, 0.036 -> picks >= 56
        ages = [18, 18, 18, 25, 25, 25, 45, 45, 56, 56]
        ratings = [f"{u}::10::5::1" for u in range(1, 11)]
        users = [f"{u}::M::{age}::0::00000"
                 for u, age in enumerate(ages, start=1)]
        rpath, upath = write_movielens(tmp_path, ratings, users)
        result = ingest_movielens(rpath, upath, "age")
        assert result.rule["threshold"] == 56
        assert result.rule["minority_side"] == ">="
        assert result.minority_ratio == pytest.approx(0.2)

    def test_minority_side_can_be_low(self, tmp_path):
        # one young user among four older ones: minority side is "< 25"
        ages = [1, 25, 25, 25, 25]
        ratings = [f"{u}::10::5::1" for u in range(1, 6)]
        users = [f"{u}::M::{age}::0::00000"
                 for u, age in enumerate(ages, start=1)]
        rpath, upath = write_movielens(tmp_path, ratings, users)
        result = ingest_movielens(rpath, upath, "age")
        assert result.rule["minority_side"] == "<"
        assert result.dataset.demographic[0] == 1


class TestErrors:
    def test_missing_demographics(self, tmp_path):
        rpath, upath = write_movielens(
            tmp_path, ["1::10::5::1", "2::10::5::1"], ["1::M::25::0::0"])
        with pytest.raises(ValueError, match="no demographics for user"):
            ingest_movielens(rpath, upath, "gender")

    def test_malformed_row_location(self, tmp_path):
        rpath, upath = write_movielens(
            tmp_path, ["1::10::5::1", "garbage-line"], ["1::M::25::0::0"])
        with pytest.raises(ValueError, match="ratings.dat:2"):
            ingest_movielens(rpath, upath, "gender")

    def test_bad_attribute(self, tmp_path):
        rpath, upath = toy_files(tmp_path)
        with pytest.raises(ValueError, match="attribute"):
            ingest_movielens(rpath, upath, "occupation")

    def test_all_filtered(self, tmp_path):
        rpath, upath = toy_files(tmp_path)
        with pytest.raises(ValueError, match="no interactions"):
            ingest_movielens(rpath, upath, "gender", min_rating=9.0)


def test_idmaps_written(tmp_path):
    rpath, upath = toy_files(tmp_path)
    result = ingest_movielens(rpath, upath, "gender")
    out = tmp_path / "maps"
    write_idmaps(result.user_idmap, result.item_idmap, str(out))
    lines = (out / "item_idmap.tsv").read_text().splitlines()
    assert lines[0] == "10\t0"


@pytest.mark.skipif(not os.path.exists(ML_RATINGS),
                    reason="MovieLens-1M files not present")
class TestRealMovielens:
    def test_gender_minority_share(self):
        result = ingest_movielens(ML_RATINGS, ML_USERS, "gender")
        assert result.minority_ratio == pytest.approx(0.283, abs=0.005)

    def test_age_minority_share(self):
        result = ingest_movielens(ML_RATINGS, ML_USERS, "age")
        assert result.minority_ratio == pytest.approx(0.236, abs=0.005)
