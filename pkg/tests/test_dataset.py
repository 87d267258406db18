from __future__ import annotations

import numpy as np
import pytest

from llmhg.dataset import (
    InteractionDataset,
    corpus_stats,
    leave_one_out,
    parse_amazon_csv,
    parse_movielens,
    read_dump,
    stats_from_counts,
    truncate_sequences,
    write_dump,
)
from llmhg.dataset.synthetic import planted_cluster_of
from llmhg.errors import DataIoError, EmptyDataset, InternalInvariantViolation, InvalidConfig, ParseError
from llmhg.event_bus import EVENT_BUS


def _write(path, text, encoding="utf-8"):
    path.write_text(text, encoding=encoding)
    return path


def test_parse_movielens(tmp_path):
    ratings = _write(
        tmp_path / "ratings.dat",
        "1::10::5::300\n1::11::4::100\n1::12::3::200\n1::10::2::400\n"
        "2::10::5::1\n2::11::5::2\n"
        "3::12::1::5\n3::13::1::5\n3::11::1::4\n",
        encoding="latin-1",
    )
    movies = _write(
        tmp_path / "movies.dat",
        "10::Toy Story (1995)::Animation|Children's\n11::Heat (1995)::Action|Crime\n"
        "12::Amélie (2001)::Comedy|Romance\n13::Up (2009)::Animation\n",
        encoding="latin-1",
    )
    dataset = parse_movielens(ratings, movies)

    # user 2 has only two distinct items and is dropped
    assert dataset.users == ["1", "3"]
    # chronological, duplicates keep their first occurrence
    assert dataset.sequences["1"] == ("11", "12", "10")
    # equal timestamps keep file order
    assert dataset.sequences["3"] == ("11", "12", "13")
    assert dataset.catalog.attributes_of("11") == ("Action", "Crime")
    assert dataset.catalog.title_of("12") == "Amélie (2001)"
    assert EVENT_BUS.count("dataset.ingested") == 1


def test_parse_movielens_errors(tmp_path):
    movies = _write(tmp_path / "movies.dat", "1::A::Drama\n")
    with pytest.raises(DataIoError):
        parse_movielens(tmp_path / "missing.dat", movies)
    bad = _write(tmp_path / "ratings.dat", "1::1::5::100\n1::2::5\n")
    with pytest.raises(ParseError) as excinfo:
        parse_movielens(bad, movies)
    assert excinfo.value.line_number == 2
    negative = _write(tmp_path / "neg.dat", "1::1::5::-3\n")
    with pytest.raises(ParseError):
        parse_movielens(negative, movies)


def test_parse_amazon_with_metadata(tmp_path):
    rows = "user,item,rating,timestamp\n" + "".join(f"a,p{i},5,{i}\n" for i in range(4)) + "b,p1,4,9\n"
    interactions = _write(tmp_path / "beauty.csv", rows)
    metadata = _write(tmp_path / "meta.tsv", "p0\tSkin Care\tAcme\np1\tMakeup\t\n")
    dataset = parse_amazon_csv(interactions, metadata)
    assert dataset.users == ["a"]
    assert dataset.sequences["a"] == ("p0", "p1", "p2", "p3")
    assert dataset.catalog.default_angle == "category"
    assert dataset.catalog.attributes_of("p0") == ("category:Skin Care", "brand:Acme")
    assert dataset.catalog.attributes_of("p1") == ("category:Makeup",)
    assert dataset.catalog.attributes_of("p3") == ()


def test_parse_amazon_too_short(tmp_path):
    interactions = _write(tmp_path / "toys.csv", "a,p1,5,1\na,p2,5,2\n")
    with pytest.raises(EmptyDataset):
        parse_amazon_csv(interactions)


def test_truncate_and_split(tiny_dataset):
    truncated = truncate_sequences(tiny_dataset, 4)
    assert truncated.sequences["u1"] == ("m2", "m3", "m4", "m5")
    assert truncated.n_items == tiny_dataset.n_items

    split = leave_one_out(truncated)
    u1 = split.users["u1"]
    assert (u1.train, u1.valid, u1.test) == (("m2", "m3"), "m4", "m5")
    assert u1.history == ("m2", "m3", "m4")
    assert u1.reassemble() == truncated.sequences["u1"]
    assert split.users["u3"].train == ("m5",)
    assert split.item_order == tuple(sorted(tiny_dataset.catalog.attributes))

    with pytest.raises(InvalidConfig):
        truncate_sequences(tiny_dataset, 2)


def test_leave_one_out_rejects_short_sequences(tiny_catalog):
    dataset = InteractionDataset(sequences={"u": ("m1", "m2")}, catalog=tiny_catalog)
    with pytest.raises(InternalInvariantViolation):
        leave_one_out(dataset)


def test_corpus_stats(tiny_dataset):
    stats = corpus_stats(tiny_dataset)
    assert (stats.n_users, stats.n_items, stats.n_actions) == (3, 6, 12)
    assert stats.avg_length == pytest.approx(4.0)
    assert stats.sparsity == pytest.approx(1 - 12 / 18)
    table = stats.as_table("tiny")
    assert "# Users" in table and "Sparsity" in table


def test_published_sparsity_values():
    beauty = stats_from_counts(22363, 12101, 198502)
    assert abs(100 * beauty.sparsity - 99.93) < 0.005
    assert beauty.avg_length == pytest.approx(8.9, abs=0.05)
    movielens = stats_from_counts(6041, 3417, 999611)
    assert abs(100 * movielens.sparsity - 95.16) < 0.01
    assert "99.93%" in beauty.as_table("Beauty")
    with pytest.raises(EmptyDataset):
        stats_from_counts(0, 10, 0)


def test_dump_round_trip(tmp_path, tiny_dataset):
    write_dump(tiny_dataset, tmp_path / "dump")
    loaded = read_dump(tmp_path / "dump")
    assert dict(loaded.sequences) == dict(tiny_dataset.sequences)
    assert dict(loaded.catalog.attributes) == dict(tiny_dataset.catalog.attributes)
    assert loaded.catalog.default_angle == "genre"


def test_read_dump_validates(tmp_path, tiny_dataset):
    write_dump(tiny_dataset, tmp_path)
    (tmp_path / "sequences.tsv").write_text("u1\tm1,m2\n", encoding="utf-8")
    with pytest.raises(ParseError):
        read_dump(tmp_path)
    (tmp_path / "sequences.tsv").write_text("u1\tm1,m2,zz\n", encoding="utf-8")
    with pytest.raises(ParseError):
        read_dump(tmp_path)
    with pytest.raises(DataIoError):
        read_dump(tmp_path / "absent")


def test_planted_corpus_structure(planted_factory):
    dataset = planted_factory()
    assert dataset.n_users == 40
    assert all(6 <= len(sequence) <= 10 for sequence in dataset.sequences.values())
    assert all(len(set(sequence)) == len(sequence) for sequence in dataset.sequences.values())
    # most of each user's items come from at most two clusters
    focused = 0
    for sequence in dataset.sequences.values():
        counts = {}
        for item in sequence:
            cluster = planted_cluster_of(dataset, item)
            counts[cluster] = counts.get(cluster, 0) + 1
        top_two = sum(sorted(counts.values(), reverse=True)[:2])
        focused += top_two / len(sequence) >= 0.7
    assert focused >= 0.8 * dataset.n_users
    assert planted_factory().sequences == dataset.sequences


def test_planted_corpus_rejects_bad_shape():
    from llmhg.dataset import planted_corpus

    with pytest.raises(InvalidConfig):
        planted_corpus(n_clusters=1, focus=2)


def test_leave_one_out_reassembles_every_sequence(planted_factory):
    dataset = planted_factory(n_users=1000, n_items=120, seed=11)
    split = leave_one_out(dataset)
    assert len(split.users) == 1000
    for user_id, sequence in dataset.sequences.items():
        user = split.users[user_id]
        assert user.reassemble() == sequence
        assert user.test == sequence[-1] and user.valid == sequence[-2]


def test_parsing_a_doubled_file_keeps_the_same_sequences(tmp_path):
    rng = np.random.default_rng(4)
    lines = []
    for user in range(1, 9):
        items = rng.choice(40, size=int(rng.integers(3, 12)), replace=False)
        lines += [f"{user}::{item}::{int(rng.integers(1, 6))}::{int(rng.integers(0, 50))}\n" for item in items]
    ratings = "".join(lines)
    movies = _write(tmp_path / "movies.dat", "".join(f"{item}::Film {item} (2000)::Drama\n" for item in range(40)))
    once = parse_movielens(_write(tmp_path / "once.dat", ratings), movies)
    twice = parse_movielens(_write(tmp_path / "twice.dat", ratings + ratings), movies)
    assert dict(twice.sequences) == dict(once.sequences)
    assert twice.items == once.items


def test_shorter_truncation_keeps_a_suffix(planted_factory):
    dataset = planted_factory(min_length=3, max_length=25)
    for short, long in ((3, 5), (5, 12), (12, 50)):
        shorter = truncate_sequences(dataset, short)
        longer = truncate_sequences(dataset, long)
        for user_id, sequence in longer.sequences.items():
            kept = shorter.sequences[user_id]
            assert len(kept) == min(short, len(sequence))
            assert sequence[len(sequence) - len(kept) :] == kept
