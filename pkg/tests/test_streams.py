import numpy as np

from stablesde.streams import BLOCK_WIDTH, block_plan, make_stream, stream_root


def test_equal_labels_equal_streams():
    a = make_stream(stream_root(7, "x", 1.5))
    b = make_stream(stream_root(7, "x", 1.5))
    assert np.array_equal(a.random(16), b.random(16))


def test_distinct_labels_distinct_streams():
    a = make_stream(stream_root(7, "x")).random(16)
    b = make_stream(stream_root(7, "y")).random(16)
    c = make_stream(stream_root(8, "x")).random(16)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_block_index_separates_streams():
    root = stream_root(3, "blocks")
    a = make_stream(root, 0).random(16)
    b = make_stream(root, 1).random(16)
    assert not np.array_equal(a, b)


def test_block_plan_covers_everything_once():
    for count in (1, BLOCK_WIDTH, BLOCK_WIDTH + 1, 3 * BLOCK_WIDTH + 17):
        plan = block_plan(count)
        assert sum(size for _, size in plan) == count
        assert plan[0][0] == 0
        for (o1, s1), (o2, _) in zip(plan, plan[1:]):
            assert o2 == o1 + s1
        assert all(size <= BLOCK_WIDTH for _, size in plan)
