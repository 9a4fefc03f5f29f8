from __future__ import annotations

import pickle

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ipworkbench.addr import parse_v6
from ipworkbench.keyed import (
    MISS,
    ElectionEvent,
    Key,
    KeyMode,
    Packet,
    ReconstructionState,
    default_buffer_len,
    elect,
    event_log,
    key_value_for,
    reconstruct,
)

# Nine-arrival example: tag digit = key position (1-based), letter = round
NINE_ARRIVALS = ["1a", "3a", "4a", "6a", "5a", "2b", "4b", "6b", "3b"]
NINE_OUTPUT = ["1a", "f", "3a", "4a", "5a", "6a", "f", "2b", "3b"]


def _arrivals(tags):
    return [(int(t[:-1]) - 1, t) for t in tags]


def _tokens(output):
    return ["f" if v is MISS else v.payload_id for v in output]


# -- keys ---------------------------------------------------------------------------------


def test_key_round_robin_ports():
    key = Key(KeyMode.DESTINATION_KEYED, tuple(range(7000, 7005)))
    assert key_value_for(1, key) == 7000
    assert key_value_for(5, key) == 7004
    assert key_value_for(6, key) == 7000
    assert key_value_for(11, key) == 7000
    assert [key.index_of(key_value_for(s, key)) for s in range(1, 11)] == [0, 1, 2, 3, 4] * 2


def test_key_sdk_pairs():
    src = tuple(parse_v6(f"2001:db8::{i}") for i in range(1, 4))
    dst = tuple(parse_v6(f"2001:db8:1::{i}") for i in range(1, 4))
    key = Key(KeyMode.SOURCE_DESTINATION_KEYED, src, dst)
    assert key_value_for(2, key) == (src[1], dst[1])
    assert key.index_of((src[2], dst[2])) == 2


@pytest.mark.parametrize(
    "mode, values, dests",
    [
        (KeyMode.SOURCE_KEYED, (7000,), ()),
        (KeyMode.SOURCE_KEYED, (7000, 7000), ()),
        (KeyMode.SOURCE_DESTINATION_KEYED, (1, 2), (3,)),
        (KeyMode.SOURCE_DESTINATION_KEYED, (1, 2), (3, 3)),
        (KeyMode.DESTINATION_KEYED, (1, 2), (3, 4)),
    ],
)
def test_key_validation(mode, values, dests):
    with pytest.raises(ValueError):
        Key(mode, values, dests)


def test_key_value_for_is_one_based():
    with pytest.raises(ValueError):
        key_value_for(0, Key(KeyMode.SOURCE_KEYED, (1, 2)))


# -- election rules ---------------------------------------------------------------------------


def test_elect_position_six_of_nine_arrival_example():
    a, b = Packet("6a"), Packet("6b")
    assert elect([a, a, a, a, b, b]) == a


def test_elect_all_miss():
    assert elect([MISS, MISS, MISS]) is MISS
    assert elect([]) is MISS


def test_elect_tie_goes_to_first_occurrence():
    x, y = Packet("X"), Packet("Y")
    assert elect([MISS, x, y, x, y, y, x]) == x
    assert elect([y, x, x, y]) == y


def test_elect_excludes_already_elected():
    x, y = Packet("X"), Packet("Y")
    assert elect([x, x, x, y], excluded={"X"}) == y
    assert elect([x, x], excluded={"X"}) is MISS


def test_elect_packet_beats_majority_miss():
    assert elect([MISS, MISS, MISS, Packet("p")]) == Packet("p")


def test_miss_is_a_singleton_that_pickles():
    assert pickle.loads(pickle.dumps(MISS)) is MISS


# -- position inference ------------------------------------------------------------------------


def test_infer_position_rounds():
    st_ = ReconstructionState(6)
    assert st_.infer_position(0) == 1
    assert st_.infer_position(0) == 7


def test_infer_position_hidden_packet_moves_to_next_free_slot():
    st_ = ReconstructionState(6, buffer_len=1)
    st_.push(1, "2a")  # with B=1 positions 1 (f) and 2 are elected at once
    assert st_.output == [MISS, Packet("2a")]
    # 1a shows up late: slot 1 is already elected, so it is a hidden packet
    assert st_.infer_position(0) == 7


def test_infer_position_rejects_bad_index():
    with pytest.raises(ValueError):
        ReconstructionState(4).infer_position(4)


# -- nine-arrival example ----------------------------------------------------------------------------------


@pytest.mark.parametrize("buffer_len", [None, 5])
def test_nine_arrival_example(buffer_len):
    state = ReconstructionState(6, buffer_len)
    events = []
    for key_index, tag in _arrivals(NINE_ARRIVALS):
        events += state.push(key_index, tag)
    events += state.flush()
    assert _tokens(state.output)[:9] == NINE_OUTPUT
    assert [e.position for e in events] == list(range(1, len(events) + 1))
    assert events[5] == ElectionEvent(6, Packet("6a"))
    # the remaining arrivals (4b, 6b) close the second round with 5b missing
    assert _tokens(state.output)[9:] == ["4b", "f", "6b"]


def test_nine_arrival_first_election_is_1a():
    state = ReconstructionState(6)
    events = []
    for key_index, tag in _arrivals(NINE_ARRIVALS[:5]):
        events += state.push(key_index, tag)
    assert events[0] == ElectionEvent(1, Packet("1a"))


def test_event_log_format():
    events = [ElectionEvent(1, Packet("1a")), ElectionEvent(2, MISS)]
    assert event_log(events) == "1,1a\n2,f\n"


def test_default_buffer_len():
    assert [default_buffer_len(n) for n in (2, 5, 6, 7, 200)] == [1, 3, 3, 4, 100]


def test_buffer_bound_respected():
    state = ReconstructionState(10)
    for i in range(40):
        state.push(i % 10, i)
        assert state.pending < state.buffer_len


# -- flush ----------------------------------------------------------------------------------------


def test_flush_empty():
    assert ReconstructionState(5).flush() == []


def test_flush_twice_and_push_after_flush():
    state = ReconstructionState(3)
    state.push(0, "a")
    assert state.flush() == [ElectionEvent(1, Packet("a"))]
    assert state.flush() == []
    with pytest.raises(RuntimeError):
        state.push(1, "b")


@pytest.mark.parametrize("n", range(2, 12))
def test_trailing_loss_gives_final_miss(n):
    state = ReconstructionState(n)
    events = []
    for i in range(n - 1):
        events += state.push(i, i)
    events += state.flush(until=n)
    assert events[-1] == ElectionEvent(n, MISS)
    assert [e.value for e in events[:-1]] == [Packet(i) for i in range(n - 1)]


# -- properties ---------------------------------------------------------------------------------


def test_identity_channel_exhaustive():
    for n in range(2, 51):
        for length in range(8 * n + 1):
            out = reconstruct([(i % n, i) for i in range(length)], n)
            assert out == [Packet(i) for i in range(length)], (n, length)


@pytest.mark.parametrize("n", range(3, 9))
@pytest.mark.parametrize("buffer", ["half", "n-1"])
def test_single_adjacent_transposition_corrected(n, buffer):
    length = 4 * n
    b = None if buffer == "half" else n - 1
    for i in range(length - 1):
        order = list(range(length))
        order[i], order[i + 1] = order[i + 1], order[i]
        out = reconstruct([(s % n, s) for s in order], n, b)
        assert out == [Packet(s) for s in range(length)], (n, i)


@st.composite
def impaired_streams(draw):
    n = draw(st.integers(2, 12))
    length = draw(st.integers(0, 6 * n))
    kept = [s for s in range(length) if draw(st.booleans()) or draw(st.booleans())]
    # arbitrary local shuffling on top of loss
    order = list(kept)
    for i in range(len(order) - 1):
        if draw(st.integers(0, 3)) == 0:
            order[i], order[i + 1] = order[i + 1], order[i]
    return n, length, order


@settings(max_examples=300, deadline=None)
@given(impaired_streams(), st.sampled_from(["half", "n-1", 1]))
def test_no_duplication_and_completeness(case, buffer):
    n, length, order = case
    b = {"half": None, "n-1": n - 1, 1: 1}[buffer]
    state = ReconstructionState(n, b)
    for s in order:
        state.push(s % n, s)
    state.flush(until=length)
    ids = [v.payload_id for v in state.output if v is not MISS]
    assert len(ids) == len(set(ids))
    assert sorted(ids) == sorted(order)
    assert len(state.output) >= len(order)
    assert state.output.count(MISS) == len(state.output) - len(order)
