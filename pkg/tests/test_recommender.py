import json
import random

import httpx
import pytest

import oracles
from reelchat.kb import Kind, load_kb, make_attribute
from reelchat.recommender import (
    KBRecommender,
    RecommendationQuery,
    RecommenderBackendError,
    RemoteRecommender,
    person_recommend,
    recommend,
)

CRIME = make_attribute(Kind.GENRE, "crime")
ACTION = make_attribute(Kind.GENRE, "action")
HEAT = make_attribute(Kind.TITLE, "Heat")
MISSION = make_attribute(Kind.TITLE, "Mission: Impossible")
PACINO = make_attribute(Kind.PERSON, "Al Pacino")


def result_ids(candidates):
    return [(c.attribute.id, c.score) for c in candidates]


class TestTitleRecommendation:
    def test_crime_positives_frozen_ranking(self, kb_main):
        query = RecommendationQuery(positives=frozenset({CRIME}))
        got = result_ids(recommend(query, kb_main, 4))
        # all four crime movies score 1; popularity then id break the ties
        assert got == [
            ("godfather", 1),
            ("pulp fiction", 1),
            ("knives out", 1),
            ("heat", 1),
        ]

    def test_negative_genre_pushes_titles_down(self, kb_main):
        query = RecommendationQuery(
            positives=frozenset({CRIME}), negatives=frozenset({ACTION})
        )
        got = result_ids(recommend(query, kb_main, 4))
        # heat is both crime and action: 1 - 1 = 0 drops it off the podium
        assert got[:3] == [("godfather", 1), ("pulp fiction", 1), ("knives out", 1)]
        assert ("heat", 1) not in got

    def test_negative_title_is_hard_excluded(self, kb_main):
        query = RecommendationQuery(
            positives=frozenset({CRIME}), negatives=frozenset({HEAT})
        )
        got = result_ids(recommend(query, kb_main, 11))
        assert all(cid != "heat" for cid, _ in got)

    def test_exclude_list_is_honored(self, kb_main):
        query = RecommendationQuery(
            positives=frozenset({CRIME}), exclude=frozenset({make_attribute(Kind.TITLE, "The Godfather")})
        )
        got = result_ids(recommend(query, kb_main, 3))
        assert got[0] == ("pulp fiction", 1)

    def test_person_positive_reaches_titles(self, kb_main):
        query = RecommendationQuery(positives=frozenset({PACINO}))
        got = result_ids(recommend(query, kb_main, 2))
        assert got == [("godfather", 1), ("heat", 1)]

    def test_score_can_go_negative(self, kb_main):
        query = RecommendationQuery(positives=frozenset(), negatives=frozenset({CRIME}))
        got = result_ids(recommend(query, kb_main, 11))
        scores = dict(got)
        assert scores["godfather"] == -1
        assert scores["antlers"] == 0

    def test_empty_query_ranks_by_popularity(self, kb_main):
        got = result_ids(recommend(RecommendationQuery(positives=frozenset()), kb_main, 3))
        assert got == [("avengers endgame", 0), ("godfather", 0), ("pulp fiction", 0)]

    def test_k_zero_or_negative_is_empty(self, kb_main):
        query = RecommendationQuery(positives=frozenset({CRIME}))
        assert recommend(query, kb_main, 0) == []
        assert recommend(query, kb_main, -3) == []

    def test_matched_attributes_reported(self, kb_main):
        query = RecommendationQuery(positives=frozenset({CRIME, PACINO}))
        top = recommend(query, kb_main, 1)[0]
        assert top.attribute.id == "godfather"
        assert top.score == 2
        assert top.matched == frozenset({CRIME, PACINO})


class TestPersonTarget:
    def test_cast_of_title_excludes_directors(self, kb_main):
        query = RecommendationQuery(positives=frozenset({MISSION}), target_kind=Kind.PERSON)
        got = [c for c in recommend(query, kb_main, 30) if c.score > 0]
        assert result_ids(got) == [("keri russell", 1), ("tom cruise", 1)]

    def test_shared_cast_between_persons(self, kb_main):
        cruise = make_attribute(Kind.PERSON, "Tom Cruise")
        query = RecommendationQuery(positives=frozenset({cruise}), target_kind=Kind.PERSON)
        got = [c for c in recommend(query, kb_main, 30) if c.score > 0]
        assert result_ids(got) == [("keri russell", 1)]

    def test_genre_positive_never_matches_persons(self, kb_main):
        query = RecommendationQuery(positives=frozenset({CRIME}), target_kind=Kind.PERSON)
        got = recommend(query, kb_main, 30)
        assert all(c.score == 0 for c in got)

    def test_person_recommend_helper_retargets(self, kb_main):
        query = RecommendationQuery(positives=frozenset({MISSION}))
        direct = recommend(
            RecommendationQuery(positives=frozenset({MISSION}), target_kind=Kind.PERSON),
            kb_main,
            5,
        )
        helper = person_recommend(query, kb_main, 5)
        assert result_ids(helper) == result_ids(direct)

    def test_self_is_never_a_match(self, kb_main):
        cruise = make_attribute(Kind.PERSON, "Tom Cruise")
        query = RecommendationQuery(positives=frozenset({cruise}), target_kind=Kind.PERSON)
        scores = dict(result_ids(recommend(query, kb_main, 30)))
        assert scores["tom cruise"] == 0


class TestGenreTarget:
    def test_title_positive_reaches_its_genres(self, kb_main):
        query = RecommendationQuery(positives=frozenset({HEAT}), target_kind=Kind.GENRE)
        got = [c for c in recommend(query, kb_main, 20) if c.score > 0]
        assert sorted(c.attribute.id for c in got) == ["action", "crime", "thriller"]


class TestTieBreakTotalOrder:
    def test_exact_tie_falls_back_to_id(self):
        records = [
            {"title": "Bravo", "year": 2000, "genres": ["drama"], "actors": [], "directors": [], "popularity": 10},
            {"title": "Alpha", "year": 2001, "genres": ["drama"], "actors": [], "directors": [], "popularity": 10},
            {"title": "Charlie", "year": 2002, "genres": ["drama"], "actors": [], "directors": [], "popularity": 30},
        ]
        kb = load_kb([json.dumps(r) for r in records])
        drama = make_attribute(Kind.GENRE, "drama")
        got = result_ids(recommend(RecommendationQuery(positives=frozenset({drama})), kb, 3))
        assert got == [("charlie", 1), ("alpha", 1), ("bravo", 1)]

    def test_matches_oracle_on_random_queries(self, kb_main):
        rng = random.Random(20240817)
        attrs = kb_main.attributes()
        for _ in range(150):
            query = RecommendationQuery(
                positives=frozenset(rng.sample(attrs, rng.randrange(4))),
                negatives=frozenset(rng.sample(attrs, rng.randrange(3))),
                target_kind=rng.choice(list(Kind)),
                exclude=frozenset(rng.sample(attrs, rng.randrange(2))),
            )
            k = rng.randrange(0, 35)
            got = result_ids(recommend(query, kb_main, k))
            want = oracles.brute_force_recommend(
                kb_main, query.positives, query.negatives, query.target_kind, k, query.exclude
            )
            assert got == want


class TestKBRecommender:
    def test_bound_instance_delegates(self, kb_main):
        query = RecommendationQuery(positives=frozenset({CRIME}))
        assert result_ids(KBRecommender(kb_main).recommend(query, 4)) == result_ids(
            recommend(query, kb_main, 4)
        )


def _mock_remote(handler):
    transport = httpx.MockTransport(handler)
    return RemoteRecommender(
        "http://recommender.test/rank", client=httpx.Client(transport=transport)
    )


class TestRemoteRecommender:
    def test_request_body_and_response_parsing(self, kb_main):
        seen = {}

        def handler(request):
            seen["body"] = json.loads(request.content)
            return httpx.Response(
                200,
                json={
                    "candidates": [
                        {
                            "attribute": {"kind": "title", "id": "heat", "display": "Heat"},
                            "score": 2,
                        },
                        {
                            "attribute": {"kind": "title", "id": "gravity", "display": "Gravity"},
                            "score": 1,
                        },
                    ]
                },
            )

        remote = _mock_remote(handler)
        query = RecommendationQuery(
            positives=frozenset({CRIME, ACTION}),
            negatives=frozenset({HEAT}),
            exclude=frozenset({MISSION}),
        )
        got = remote.recommend(query, 2)
        assert result_ids(got) == [("heat", 2), ("gravity", 1)]
        body = seen["body"]
        assert [p["id"] for p in body["positives"]] == ["action", "crime"]
        assert [n["id"] for n in body["negatives"]] == ["heat"]
        assert [e["id"] for e in body["exclude"]] == ["mission impossible"]
        assert body["target_kind"] == "title"
        assert body["k"] == 2

    def test_overlong_response_is_trimmed_to_k(self):
        def handler(request):
            rows = [
                {"attribute": {"kind": "genre", "id": f"g{i}", "display": f"g{i}"}, "score": i}
                for i in range(5)
            ]
            return httpx.Response(200, json={"candidates": rows})

        remote = _mock_remote(handler)
        got = remote.recommend(RecommendationQuery(positives=frozenset()), 2)
        assert len(got) == 2

    def test_http_error_raises_backend_error(self):
        def handler(request):
            return httpx.Response(503, json={"error": "down"})

        remote = _mock_remote(handler)
        with pytest.raises(RecommenderBackendError):
            remote.recommend(RecommendationQuery(positives=frozenset()), 3)

    def test_timeout_raises_backend_error(self):
        def handler(request):
            raise httpx.ConnectTimeout("slow")

        remote = _mock_remote(handler)
        with pytest.raises(RecommenderBackendError):
            remote.recommend(RecommendationQuery(positives=frozenset()), 3)

    @pytest.mark.parametrize(
        "payload",
        [
            {"wrong": []},
            {"candidates": [{"attribute": {"kind": "title"}, "score": 1}]},
            {"candidates": [{"score": 1}]},
            {"candidates": [{"attribute": {"kind": "title", "id": "heat", "display": "Heat"}, "score": "high"}]},
        ],
    )
    def test_malformed_response_raises_backend_error(self, payload):
        def handler(request):
            return httpx.Response(200, json=payload)

        remote = _mock_remote(handler)
        with pytest.raises(RecommenderBackendError, match="malformed"):
            remote.recommend(RecommendationQuery(positives=frozenset()), 3)

    def test_display_id_mismatch_raises_backend_error(self):
        def handler(request):
            return httpx.Response(
                200,
                json={
                    "candidates": [
                        {"attribute": {"kind": "title", "id": "heat", "display": "Gravity"}, "score": 1}
                    ]
                },
            )

        remote = _mock_remote(handler)
        with pytest.raises(Exception):
            remote.recommend(RecommendationQuery(positives=frozenset()), 1)
