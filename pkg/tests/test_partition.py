import numpy as np
import pytest
from hypothesis import given, strategies as st

from mixadc.partition import AntennaPartition, high_res_count


@st.composite
def partitions(draw):
    M = draw(st.integers(1, 40))
    set_a = draw(st.sets(st.integers(0, M - 1)))
    return AntennaPartition.from_high_res(M, sorted(set_a))


class TestHighResCount:
    @pytest.mark.parametrize("eta,n", [(0.2, 13), (0.5, 32), (0.8, 51), (0.1, 6), (0.9, 58),
                                       (0.0, 0), (1.0, 64)])
    def test_m64(self, eta, n):
        assert high_res_count(64, eta) == n

    def test_ties_round_away_from_zero(self):
        assert high_res_count(4, 0.125) == 1
        assert high_res_count(4, 0.375) == 2

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            high_res_count(8, 1.2)


class TestAntennaPartition:
    def test_rejects_overlap_and_gaps(self):
        with pytest.raises(ValueError):
            AntennaPartition(np.array([0, 1]), np.array([1, 2]), 3)
        with pytest.raises(ValueError):
            AntennaPartition(np.array([0]), np.array([2]), 3)
        with pytest.raises(ValueError):
            AntennaPartition(np.array([1, 0]), np.array([2]), 3)

    def test_read_only(self):
        part = AntennaPartition.from_high_res(4, [1, 3])
        with pytest.raises(ValueError):
            part.set_a[0] = 2

    def test_positions(self):
        part = AntennaPartition.from_high_res(5, [1, 4])
        assert part.u(4) == 1 and part.v(2) == 1
        with pytest.raises(KeyError):
            part.u(0)
        with pytest.raises(KeyError):
            part.v(1)
        assert part.eta == pytest.approx(0.4)

    def test_combine_example(self):
        part = AntennaPartition.from_high_res(4, [0, 2])
        out = part.combine(np.array(["a0", "a1"], object), np.array(["b0", "b1"], object))
        assert list(out) == ["a0", "b0", "a1", "b1"]

    @given(partitions())
    def test_index_consistency(self, part):
        for m in part.set_a:
            assert part.set_a[part.u(m)] == m
        for m in part.set_b:
            assert part.set_b[part.v(m)] == m
        assert len(part.set_a) + len(part.set_b) == part.M

    @given(partitions())
    def test_combine_inverts_split(self, part):
        h = np.arange(part.M) + 1j * np.arange(part.M)[::-1]
        assert np.array_equal(part.combine(h[part.set_a], h[part.set_b]), h)

    def test_equality_and_hash(self):
        a = AntennaPartition.from_high_res(6, [0, 3])
        b = AntennaPartition.from_high_res(6, np.array([0, 3]))
        assert a == b and hash(a) == hash(b)
        assert a != AntennaPartition.from_high_res(6, [0, 4])
