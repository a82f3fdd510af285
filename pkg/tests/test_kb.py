import io
import json

import pytest
from hypothesis import given, strategies as st

from reelchat.kb import (
    Attribute,
    KBParseError,
    KBValidationError,
    Kind,
    MovieKB,
    Predicate,
    canonicalize,
    dump_kb,
    load_kb,
    make_attribute,
)


class TestCanonicalize:
    @pytest.mark.parametrize(
        "raw, kind, expected",
        [
            ("The Matrix", Kind.TITLE, "matrix"),
            ("the matrix", Kind.TITLE, "matrix"),
            ("Mission: Impossible", Kind.TITLE, "mission impossible"),
            ("Mission Impossible", Kind.TITLE, "mission impossible"),
            ("A Quiet Place", Kind.TITLE, "quiet place"),
            ("An American Werewolf", Kind.TITLE, "american werewolf"),
            ("  Sci-Fi  ", Kind.GENRE, "sci fi"),
            ("Robert De Niro", Kind.PERSON, "robert de niro"),
            ("SAMUEL L. JACKSON", Kind.PERSON, "samuel l jackson"),
            ("Amélie", Kind.TITLE, "amélie"),
        ],
    )
    def test_examples(self, raw, kind, expected):
        assert canonicalize(raw, kind) == expected

    def test_article_is_stripped_for_titles_only(self):
        assert canonicalize("The Thing", Kind.TITLE) == "thing"
        assert canonicalize("The Thing", Kind.GENRE) == "the thing"
        assert canonicalize("The Thing") == "the thing"

    def test_only_one_article_layer_comes_off(self):
        # stacked articles make title canonicalization genuinely non-idempotent
        once = canonicalize("The A Team", Kind.TITLE)
        assert once == "a team"
        assert canonicalize(once, Kind.TITLE) == "team"

    def test_bare_article_survives(self):
        assert canonicalize("The", Kind.TITLE) == "the"
        assert canonicalize("A", Kind.TITLE) == "a"

    @given(st.text(max_size=40))
    def test_idempotent_for_non_title_kinds(self, text):
        first = canonicalize(text, Kind.GENRE)
        assert canonicalize(first, Kind.GENRE) == first

    @given(st.text(max_size=40))
    def test_plain_canonicalization_is_idempotent(self, text):
        first = canonicalize(text)
        assert canonicalize(first) == first


class TestAttribute:
    def test_equality_ignores_display(self):
        a = Attribute(kind=Kind.TITLE, id="heat", display="Heat")
        b = Attribute(kind=Kind.TITLE, id="heat", display="HEAT")
        assert a == b
        assert hash(a) == hash(b)

    def test_mismatched_id_rejected(self):
        with pytest.raises(KBValidationError):
            Attribute(kind=Kind.TITLE, id="heat", display="Gravity")

    def test_make_attribute_derives_id(self):
        attr = make_attribute(Kind.TITLE, "The Godfather")
        assert attr.id == "godfather"
        assert attr.display == "The Godfather"
        assert attr.key == (Kind.TITLE, "godfather")


class TestLoadDump:
    def test_round_trip_is_byte_stable(self, fixtures_dir):
        path = fixtures_dir / "kb_fixture.jsonl"
        kb = load_kb(path)
        buffer = io.StringIO()
        dump_kb(kb, buffer)
        again = load_kb(io.StringIO(buffer.getvalue()))
        second = io.StringIO()
        dump_kb(again, second)
        assert buffer.getvalue() == second.getvalue()
        assert kb == again

    def test_dump_orders_by_title_then_year_with_trailing_newline(self):
        lines = [
            json.dumps({"title": "Zebra", "year": 2000, "genres": ["drama"], "actors": [], "directors": [], "popularity": 1}),
            json.dumps({"title": "Alpha", "year": 2010, "genres": ["drama"], "actors": [], "directors": [], "popularity": 1}),
            json.dumps({"title": "Alpha", "year": 1999, "genres": ["drama"], "actors": [], "directors": [], "popularity": 2}),
        ]
        kb = load_kb(lines)
        buffer = io.StringIO()
        dump_kb(kb, buffer)
        text = buffer.getvalue()
        assert text.endswith("\n")
        titles = [(json.loads(l)["title"], json.loads(l)["year"]) for l in text.splitlines()]
        assert titles == [("Alpha", 1999), ("Alpha", 2010), ("Zebra", 2000)]

    def test_blank_lines_are_skipped(self):
        record = json.dumps({"title": "Heat", "year": 1995, "genres": [], "actors": [], "directors": [], "popularity": 1})
        kb = load_kb(["\n", record, "   \n"])
        assert len(kb) == 1

    def test_invalid_json_reports_line_number(self):
        good = json.dumps({"title": "Heat", "year": 1995, "genres": [], "actors": [], "directors": [], "popularity": 1})
        with pytest.raises(KBParseError) as exc_info:
            load_kb([good, "{not json"])
        assert exc_info.value.line_no == 2
        assert str(exc_info.value).startswith("line 2:")

    @pytest.mark.parametrize("missing", ["title", "year", "genres", "actors", "directors", "popularity"])
    def test_missing_field_reports_name(self, missing):
        record = {"title": "Heat", "year": 1995, "genres": [], "actors": [], "directors": [], "popularity": 1}
        del record[missing]
        with pytest.raises(KBParseError, match=missing):
            load_kb([json.dumps(record)])

    def test_non_object_record_rejected(self):
        with pytest.raises(KBParseError, match="line 1"):
            load_kb(["[1, 2]"])

    def test_bad_year_and_title_types(self):
        base = {"title": "Heat", "year": 1995, "genres": [], "actors": [], "directors": [], "popularity": 1}
        with pytest.raises(KBParseError, match="year"):
            load_kb([json.dumps({**base, "year": "1995"})])
        with pytest.raises(KBParseError, match="title"):
            load_kb([json.dumps({**base, "title": "  "})])
        with pytest.raises(KBParseError, match="genres"):
            load_kb([json.dumps({**base, "genres": ["ok", 3]})])

    def test_negative_popularity_rejected_with_line(self):
        record = {"title": "Heat", "year": 1995, "genres": [], "actors": [], "directors": [], "popularity": -1}
        with pytest.raises(KBValidationError, match="line 1: popularity must be non-negative"):
            load_kb([json.dumps(record)])

    def test_boolean_popularity_is_not_a_number(self):
        record = {"title": "Heat", "year": 1995, "genres": [], "actors": [], "directors": [], "popularity": True}
        with pytest.raises(KBParseError, match="popularity"):
            load_kb([json.dumps(record)])

    def test_duplicate_title_year_rejected(self):
        record = {"title": "Heat", "year": 1995, "genres": [], "actors": [], "directors": [], "popularity": 1}
        with pytest.raises(KBValidationError, match="duplicate"):
            load_kb([json.dumps(record), json.dumps({**record, "popularity": 2})])

    def test_same_title_different_year_allowed(self):
        record = {"title": "Heat", "year": 1995, "genres": [], "actors": [], "directors": [], "popularity": 1}
        kb = load_kb([json.dumps(record), json.dumps({**record, "year": 2024})])
        assert len(kb) == 2
        assert len(kb.attributes(Kind.TITLE)) == 1


def _mini_kb():
    records = [
        {"title": "Alpha", "year": 2000, "genres": ["drama"], "actors": ["Pat Lee", "Sam Roe"], "directors": ["Kim Fox"], "popularity": 10},
        {"title": "Beta", "year": 2001, "genres": ["drama", "crime"], "actors": ["Sam Roe"], "directors": ["Pat Lee"], "popularity": 20},
    ]
    return load_kb([json.dumps(r) for r in records])


class TestRelations:
    def test_related_is_symmetric_and_irreflexive(self, kb_main):
        attrs = kb_main.attributes()
        for a in attrs:
            assert not kb_main.related(a, a)
        for a in attrs[:8]:
            for b in attrs[:8]:
                assert kb_main.related(a, b) == kb_main.related(b, a)

    def test_expected_edges(self):
        kb = _mini_kb()
        alpha = kb.lookup(Kind.TITLE, "alpha")
        drama = kb.lookup(Kind.GENRE, "drama")
        crime = kb.lookup(Kind.GENRE, "crime")
        pat = kb.lookup(Kind.PERSON, "pat lee")
        sam = kb.lookup(Kind.PERSON, "sam roe")
        kim = kb.lookup(Kind.PERSON, "kim fox")
        assert kb.related(alpha, drama)
        assert not kb.related(alpha, crime)
        assert kb.related(alpha, pat)
        assert kb.related(alpha, kim)
        # derived shared-cast edge
        assert kb.related(pat, sam)
        # co-workers who never shared a cast are unrelated
        assert not kb.related(kim, sam)

    def test_cast_with_requires_shared_record_not_shared_title(self):
        records = [
            {"title": "Remake", "year": 1990, "genres": [], "actors": ["Old Star"], "directors": [], "popularity": 1},
            {"title": "Remake", "year": 2020, "genres": [], "actors": ["New Star"], "directors": [], "popularity": 2},
        ]
        kb = load_kb([json.dumps(r) for r in records])
        old = kb.lookup(Kind.PERSON, "old star")
        new = kb.lookup(Kind.PERSON, "new star")
        assert not kb.related(old, new)

    def test_relations_between_excludes_derived_by_default(self):
        kb = _mini_kb()
        pat = kb.lookup(Kind.PERSON, "pat lee")
        sam = kb.lookup(Kind.PERSON, "sam roe")
        assert kb.relations_between(pat, sam) == []
        derived = kb.relations_between(pat, sam, include_derived=True)
        assert [r.predicate for r in derived] == [Predicate.CAST_WITH]
        # symmetric predicate is oriented by id for determinism
        assert derived[0].subject.id <= derived[0].object.id

    def test_relations_between_orientation(self):
        kb = _mini_kb()
        alpha = kb.lookup(Kind.TITLE, "alpha")
        drama = kb.lookup(Kind.GENRE, "drama")
        pat = kb.lookup(Kind.PERSON, "pat lee")
        rel = kb.relations_between(drama, alpha)
        assert len(rel) == 1
        assert rel[0].subject == alpha and rel[0].object == drama
        assert rel[0].predicate is Predicate.HAS_GENRE
        both = kb.relations_between(alpha, pat)
        assert {r.predicate for r in both} == {Predicate.ACTED_IN}
        assert both[0].subject == pat and both[0].object == alpha

    def test_actor_and_director_dual_credit(self):
        kb = _mini_kb()
        beta = kb.lookup(Kind.TITLE, "beta")
        pat = kb.lookup(Kind.PERSON, "pat lee")
        rel = kb.relations_between(beta, pat)
        assert {r.predicate for r in rel} == {Predicate.DIRECTED}

    def test_neighbors_sorted_and_filterable(self):
        kb = _mini_kb()
        sam = kb.lookup(Kind.PERSON, "sam roe")
        ids = [a.id for a in kb.neighbors(sam)]
        assert ids == sorted(ids)
        acted = kb.neighbors(sam, Predicate.ACTED_IN)
        assert {a.id for a in acted} == {"alpha", "beta"}
        cast = kb.neighbors(sam, Predicate.CAST_WITH)
        assert {a.id for a in cast} == {"pat lee"}

    def test_neighbors_never_include_self(self, kb_main):
        for attr in kb_main.attributes():
            assert attr not in kb_main.neighbors(attr)


class TestGazetteer:
    def test_pair_kb_gazetteer_is_exactly_six(self, kb_pair):
        assert sorted(kb_pair.gazetteer) == [
            "action",
            "antlers",
            "horror",
            "keri russell",
            "mission impossible",
            "tom cruise",
        ]

    def test_kind_priority_on_id_collision(self):
        records = [
            {"title": "Fargo", "year": 1996, "genres": ["crime"], "actors": ["Fargo"], "directors": [], "popularity": 5},
        ]
        kb = load_kb([json.dumps(r) for r in records])
        assert kb.gazetteer["fargo"].kind is Kind.TITLE

    def test_person_outranks_genre(self):
        records = [
            {"title": "Solo", "year": 2018, "genres": ["western"], "actors": ["Western"], "directors": [], "popularity": 5},
        ]
        kb = load_kb([json.dumps(r) for r in records])
        assert kb.gazetteer["western"].kind is Kind.PERSON

    def test_fixture_stats(self, kb_main):
        assert len(kb_main) == 11
        assert len(kb_main.attributes(Kind.TITLE)) == 11
        assert len(kb_main.attributes(Kind.GENRE)) == 11
        assert len(kb_main.attributes(Kind.PERSON)) == 29


class TestPopularity:
    def test_title_popularity_is_max_over_records(self):
        records = [
            {"title": "Remake", "year": 1990, "genres": [], "actors": [], "directors": [], "popularity": 10},
            {"title": "Remake", "year": 2020, "genres": [], "actors": [], "directors": [], "popularity": 80},
        ]
        kb = load_kb([json.dumps(r) for r in records])
        title = kb.lookup(Kind.TITLE, "remake")
        assert kb.popularity(title) == 80

    def test_non_title_popularity_is_zero(self, kb_main):
        genre = kb_main.lookup(Kind.GENRE, "crime")
        person = kb_main.lookup(Kind.PERSON, "al pacino")
        assert kb_main.popularity(genre) == 0
        assert kb_main.popularity(person) == 0

    def test_unknown_title_popularity_is_zero(self, kb_main):
        ghost = make_attribute(Kind.TITLE, "No Such Film")
        assert kb_main.popularity(ghost) == 0


class TestMovieKBConstruction:
    def test_duplicate_movies_constructed_directly_rejected(self):
        movie = load_kb(
            [json.dumps({"title": "Heat", "year": 1995, "genres": [], "actors": [], "directors": [], "popularity": 1})]
        ).movies[0]
        with pytest.raises(KBValidationError):
            MovieKB([movie, movie])

    def test_attributes_sorted_by_id(self, kb_main):
        ids = [a.id for a in kb_main.attributes(Kind.PERSON)]
        assert ids == sorted(ids)

    def test_lookup_miss_returns_none(self, kb_main):
        assert kb_main.lookup(Kind.TITLE, "no such film") is None

    def test_duplicate_values_within_record_collapse(self):
        record = {"title": "Heat", "year": 1995, "genres": ["Crime", "crime"], "actors": [], "directors": [], "popularity": 1}
        kb = load_kb([json.dumps(record)])
        assert len(kb.movies[0].genres) == 1
