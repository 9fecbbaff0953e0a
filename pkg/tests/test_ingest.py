import io

import numpy as np
import pytest

from fairchain.core import EmptyDatasetError, InputError, ScoredDataset, compose
from fairchain.datagen import gen_labeled, gen_synthetic_1
from fairchain.ingest import (
    GERMAN_COMPONENTS,
    ScoreTableSchema,
    dumps_csv,
    equalize_groups,
    load_csv,
    load_german_credit,
    read_csv,
    read_german_records,
    write_csv,
)

BOOKS = """item_id,group,pCTR,pRating
book1,non-white,0.1,0.4
book2,non-white,0.4,0.1
book3,white,0.2,0.3
book4,white,0.3,0.2
"""

GERMAN_ROW = "A11 6 A34 A43 1169 A65 A75 4 {code} A101 4 A121 67 A143 A152 2 A173 1 A192 A201 1\n"


class TestCsv:
    def test_books_table(self):
        ds = read_csv(io.StringIO(BOOKS))
        assert ds.n_components == 2
        assert ds.component_names == ("pCTR", "pRating")
        assert set(ds.groups) == {"white", "non-white"}
        assert list(ds.ids) == ["book1", "book2", "book3", "book4"]
        assert not ds.has_labels

    def test_round_trip_exact(self, tmp_path):
        ds = gen_synthetic_1(n=500, seed=2)
        path = tmp_path / "s.csv"
        write_csv(ds, path)
        back = load_csv(path)
        np.testing.assert_array_equal(back.scores, ds.scores)
        assert list(back.ids) == list(ds.ids) and list(back.groups) == list(ds.groups)

    def test_round_trip_labels(self):
        ds = gen_labeled(n=30, seed=1)
        back = read_csv(io.StringIO(dumps_csv(ds)))
        np.testing.assert_array_equal(back.labels, ds.labels)
        np.testing.assert_array_equal(back.scores, ds.scores)

    def test_empty(self):
        with pytest.raises(EmptyDatasetError):
            read_csv(io.StringIO("item_id,group,score_0\n"))
        with pytest.raises(EmptyDatasetError):
            read_csv(io.StringIO(""))

    @pytest.mark.parametrize("text,match", [
        ("item_id,score_0\nx,1\n", "group"),
        ("item_id,group,score_0\nx,A,abc\ny,B,1\n", "row 2.*score_0"),
        ("item_id,group,score_0\nx,A,1\nx,B,2\n", "duplicate"),
        ("item_id,group,score_0\nx,A,1\ny,A,2\n", "two distinct groups"),
        ("item_id,group,label,score_0\nx,A,2,1\ny,B,0,2\n", "label"),
        ("item_id,group,score_0\nx,A,inf\ny,B,2\n", "non-finite"),
    ])
    def test_errors(self, text, match):
        with pytest.raises(InputError, match=match):
            read_csv(io.StringIO(text))

    def test_schema_binding(self):
        text = "id,sex,y,s1,s2\n1,m,1,0.5,2\n2,f,0,0.25,3\n"
        ds = read_csv(io.StringIO(text), ScoreTableSchema("id", "sex", "y", ("s2",)))
        np.testing.assert_array_equal(ds.scores, [[2.0], [3.0]])
        assert ds.labels.tolist() == [1, 0]

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            load_csv(tmp_path / "nope.csv")


class TestGerman:
    def test_group_sizes(self):
        ds = load_german_credit()
        assert len(ds) == 1000
        assert int(ds.mask("male").sum()) == 690
        assert int(ds.mask("female").sum()) == 310
        assert ds.component_names == GERMAN_COMPONENTS
        assert ds.group_order == ("male", "female")

    def test_first_record(self):
        rec = read_german_records()[0]
        assert (rec.credit_amount, rec.age, rec.num_credits, rec.num_liable) == (1169, 67, 2, 1)
        assert rec.sex == "male" and rec.outcome == 1

    def test_sex_codes(self, tmp_path):
        p = tmp_path / "g.data"
        p.write_text(GERMAN_ROW.format(code="A92") + GERMAN_ROW.format(code="A95"))
        assert [r.sex for r in read_german_records(p)] == ["female", "female"]

    def test_malformed(self, tmp_path):
        p = tmp_path / "g.data"
        p.write_text(GERMAN_ROW.format(code="A99"))
        with pytest.raises(InputError, match="A99"):
            read_german_records(p)
        p.write_text("A11 6 A34\n")
        with pytest.raises(InputError, match="21 fields"):
            read_german_records(p)


class TestEqualize:
    def test_equal_groups_unchanged(self):
        ds = gen_synthetic_1(n=5)
        assert equalize_groups(ds) is ds

    def test_first_mode_keeps_file_order(self):
        ds = equalize_groups(load_german_credit())
        males = [i for i, g in zip(ds.ids, ds.groups) if g == "male"]
        full = load_german_credit()
        expected = [i for i, g in zip(full.ids, full.groups) if g == "male"][:310]
        assert males == expected
        assert int(ds.mask("female").sum()) == 310

    def test_top_mode_matches_selection_oracle(self):
        rng = np.random.default_rng(8)
        n = 40
        groups = ["A"] * 28 + ["B"] * 12
        ds = ScoredDataset(ids=list(range(n)), groups=groups, scores=rng.integers(1, 6, (n, 2)).astype(float))
        c = compose(ds)
        out = equalize_groups(ds, c, mode="top")
        # oracle: repeatedly take the highest remaining A item, earliest on ties
        pool = list(range(28))
        kept = []
        for _ in range(12):
            best = max(pool, key=lambda i: (c[i], -i))
            kept.append(best)
            pool.remove(best)
        assert sorted(i for i, g in zip(out.ids, out.groups) if g == "A") == sorted(kept)
        assert [i for i, g in zip(out.ids, out.groups) if g == "B"] == list(range(28, 40))
        np.testing.assert_array_equal(out.scores, ds.scores[np.sort(np.concatenate([kept, np.arange(28, 40)]))])

    def test_random_mode_seeded(self):
        ds = load_german_credit()
        a = equalize_groups(ds, mode="random", seed=1)
        b = equalize_groups(ds, mode="random", seed=1)
        assert list(a.ids) == list(b.ids)

    def test_bad_mode(self):
        with pytest.raises(InputError):
            equalize_groups(load_german_credit(), mode="top")
        with pytest.raises(InputError):
            equalize_groups(load_german_credit(), mode="middle")
