import numpy as np
import pytest

from pixelcrypt import keying
from pixelcrypt.keying import (
    KeySet,
    KeystreamPlanes,
    Stream,
    derive_permutation,
    format_key_file,
    generate_keyset,
    materialize,
    np_bit,
    parse_key_file,
    prng_next,
    shuffle_code,
    stream_outputs,
    uniforms,
)

M64 = 1 << 64


def oracle_next(state):
    """Independent oracle: step-by-step big-integer evaluation of the three
    mix steps, written before the implementation."""
    state = (state + 0x9E3779B97F4A7C15) % M64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) % M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) % M64
    return state, z ^ (z >> 31)


# Frozen oracle outputs.
STATE0_NEXT = 0x9E3779B97F4A7C15
STATE0_OUT = 0xE220A8397B1DCDAF
SEED1_OUTPUTS = [
    0x910A2DEC89025CC1,
    0xBEEB8DA1658EEC67,
    0xF893A2EEFB32555E,
    0x71C18690EE42C90B,
    0x71BB54D8D101B5B9,
    0xC34D0BFF90150280,
    0xE099EC6CD7363CA5,
    0x85E7BB0F12278575,
]


class TestPrng:
    def test_first_step_from_zero_matches_frozen_oracle(self):
        assert oracle_next(0) == (STATE0_NEXT, STATE0_OUT)
        assert prng_next(0) == (STATE0_NEXT, STATE0_OUT)

    def test_deterministic(self):
        assert prng_next(12345) == prng_next(12345)

    def test_seed1_first_eight_outputs_distinct(self):
        state, outs = 1, []
        for _ in range(8):
            state, out = prng_next(state)
            outs.append(out)
        assert outs == SEED1_OUTPUTS
        assert len(set(outs)) == 8

    @pytest.mark.parametrize("seed", [0, 1, 42, M64 - 1, 0xDEADBEEF])
    def test_matches_oracle_along_stream(self, seed):
        s_impl = s_orc = seed
        for _ in range(64):
            s_impl, out_impl = prng_next(s_impl)
            s_orc, out_orc = oracle_next(s_orc)
            assert (s_impl, out_impl) == (s_orc, out_orc)

    @pytest.mark.parametrize("seed", [0, 7, 0xFFFFFFFFFFFFFFF0])
    def test_vectorized_stream_matches_iteration(self, seed):
        outs = stream_outputs(seed, 200)
        state = seed
        for i in range(200):
            state, out = prng_next(state)
            assert int(outs[i]) == out

    def test_stream_offsets(self):
        whole = stream_outputs(9, 50)
        tail = stream_outputs(9, 20, start=30)
        assert np.array_equal(whole[30:], tail)

    def test_stream_class_walks_the_same_sequence(self):
        s = Stream(77)
        first = [s.next_u64() for _ in range(5)]
        rest = s.take(5)
        assert np.array_equal(np.array(first + list(rest)), stream_outputs(77, 10))


class TestNpBit:
    def test_matches_stream_definition(self):
        # (i+1)-th output of the iterated recurrence, LSB.
        for seed in (0, 5, 981234):
            state = seed
            for i in range(100):
                state, out = prng_next(state)
                assert np_bit(seed, i) == out & 1

    def test_zero_zero(self):
        assert np_bit(0, 0) == STATE0_OUT & 1 == 1

    def test_deterministic(self):
        assert all(np_bit(3, i) == np_bit(3, i) for i in range(50))

    def test_balance_over_1e5_indices(self):
        ones = sum(np_bit(42, i) for i in range(100_000))
        assert 0.49 <= ones / 100_000 <= 0.51

    def test_negative_index_rejected(self):
        with pytest.raises(ValueError):
            np_bit(0, -1)


class TestShuffleCode:
    def test_range(self):
        assert all(0 <= shuffle_code(11, i) <= 5 for i in range(500))

    def test_zero_zero(self):
        assert shuffle_code(0, 0) == STATE0_OUT % 6 == 1

    def test_frequencies_over_60000_indices(self):
        outs = stream_outputs(7, 60_000) % np.uint64(6)
        counts = np.bincount(outs.astype(np.int64), minlength=6)
        for c in counts:
            assert abs(c / 60_000 - 1 / 6) <= 0.01

    def test_matches_stream_definition(self):
        state = 7
        for i in range(100):
            state, out = prng_next(state)
            assert shuffle_code(7, i) == out % 6


class TestMaterialize:
    KEYS = KeySet(k_r=101, k_g=202, k_b=303, k_s=404)

    def test_deterministic(self):
        a = materialize(self.KEYS, 9, 4)
        b = materialize(self.KEYS, 9, 4)
        assert a == b

    def test_cifar_sized_planes(self):
        planes = materialize(self.KEYS, 32, 32)
        assert planes.np_bits.shape == (3, 32, 32)
        assert planes.shuffle_codes.shape == (32, 32)
        assert planes.np_bits[0].size == 1024

    def test_row_major_index_arithmetic(self):
        planes = materialize(self.KEYS, 2, 1)
        for c, seed in enumerate((101, 202, 303)):
            assert planes.np_bits[c, 0, 0] == np_bit(seed, 0)
            assert planes.np_bits[c, 0, 1] == np_bit(seed, 1)
        assert planes.shuffle_codes[0, 0] == shuffle_code(404, 0)
        assert planes.shuffle_codes[0, 1] == shuffle_code(404, 1)
        tall = materialize(self.KEYS, 3, 2)
        # pixel index i = y*width + x
        assert tall.np_bits[0, 1, 0] == np_bit(101, 3)
        assert tall.shuffle_codes[1, 2] == shuffle_code(404, 5)

    def test_no_shuffle_codes_without_ks(self):
        planes = materialize(KeySet(1, 2, 3), 4, 4)
        assert planes.shuffle_codes is None

    @pytest.mark.parametrize("w,h", [(0, 4), (4, 0), (0, 0)])
    def test_zero_dimensions_rejected(self, w, h):
        with pytest.raises(ValueError):
            materialize(self.KEYS, w, h)

    def test_plane_independence(self):
        base = materialize(self.KEYS, 8, 8)
        for field, plane in (("k_r", 0), ("k_g", 1), ("k_b", 2)):
            keys = KeySet(**{**self.KEYS.__dict__, field: 999})
            other = materialize(keys, 8, 8)
            for c in range(3):
                same = np.array_equal(base.np_bits[c], other.np_bits[c])
                assert same == (c != plane)
            assert np.array_equal(base.shuffle_codes, other.shuffle_codes)
        shuffled = materialize(KeySet(101, 202, 303, k_s=999), 8, 8)
        assert np.array_equal(base.np_bits, shuffled.np_bits)
        assert not np.array_equal(base.shuffle_codes, shuffled.shuffle_codes)


class TestKeystreamPlanes:
    def test_invalid_bits_rejected(self):
        with pytest.raises(ValueError):
            KeystreamPlanes(np_bits=np.full((3, 2, 2), 2, dtype=np.uint8))

    def test_invalid_codes_rejected(self):
        bits = np.zeros((3, 2, 2), dtype=np.uint8)
        with pytest.raises(ValueError):
            KeystreamPlanes(np_bits=bits, shuffle_codes=np.full((2, 2), 6, dtype=np.uint8))
        with pytest.raises(ValueError):
            KeystreamPlanes(np_bits=bits, shuffle_codes=np.zeros((3, 2), dtype=np.uint8))

    def test_constant_hook(self):
        planes = KeystreamPlanes.constant(3, 2, bit=1, code=4)
        assert planes.np_bits.min() == planes.np_bits.max() == 1
        assert planes.shuffle_codes.min() == planes.shuffle_codes.max() == 4
        assert KeystreamPlanes.constant(3, 2, bit=0).shuffle_codes is None


class TestKeySet:
    def test_out_of_range_seed_rejected(self):
        with pytest.raises(ValueError):
            KeySet(k_r=M64, k_g=0, k_b=0)
        with pytest.raises(ValueError):
            KeySet(k_r=-1, k_g=0, k_b=0)

    def test_has_shuffle(self):
        assert KeySet(1, 2, 3, 4).has_shuffle
        assert not KeySet(1, 2, 3).has_shuffle

    def test_generate_reproducible(self):
        a = generate_keyset(seed=9, with_shuffle=True)
        b = generate_keyset(seed=9, with_shuffle=True)
        assert a == b
        assert a.k_s is not None
        assert generate_keyset(seed=9).k_s is None


class TestKeyFile:
    def test_round_trip(self):
        keys = KeySet(k_r=0xDEADBEEF, k_g=1, k_b=M64 - 1, k_s=0)
        assert parse_key_file(format_key_file(keys)) == keys
        no_shuffle = KeySet(5, 6, 7)
        assert parse_key_file(format_key_file(no_shuffle)) == no_shuffle

    def test_hex_case_insensitive(self):
        text = "KR=00000000DEADBEEF\nKG=0000000000000001\nKB=ffffffffffffffff\n"
        keys = parse_key_file(text)
        assert keys.k_r == 0xDEADBEEF and keys.k_b == M64 - 1

    @pytest.mark.parametrize(
        "text",
        [
            "KX=0000000000000001\nKG=0000000000000001\nKB=0000000000000001\n",
            "# comment\nKR=0000000000000001\nKG=0000000000000001\nKB=0000000000000001\n",
            "KR=0001\nKG=0000000000000001\nKB=0000000000000001\n",
            "KR=0000000000000001\n\nKG=0000000000000001\nKB=0000000000000001\n",
            "KR = 0000000000000001\nKG=0000000000000001\nKB=0000000000000001\n",
        ],
    )
    def test_unknown_or_malformed_lines_rejected(self, text):
        with pytest.raises(ValueError):
            parse_key_file(text)

    def test_missing_required_entry_rejected(self):
        with pytest.raises(ValueError, match="missing"):
            parse_key_file("KR=0000000000000001\nKG=0000000000000001\n")

    def test_duplicate_rejected(self):
        text = "KR=0000000000000001\nKR=0000000000000002\nKG=0000000000000001\nKB=0000000000000001\n"
        with pytest.raises(ValueError, match="duplicate"):
            parse_key_file(text)


class TestHelpers:
    def test_derive_permutation_is_bijection(self):
        perm = derive_permutation(Stream(55), 96)
        assert np.array_equal(np.sort(perm), np.arange(96))
        again = derive_permutation(Stream(55), 96)
        assert np.array_equal(perm, again)

    def test_uniforms_in_unit_interval(self):
        vals = uniforms(Stream(3), 1000)
        assert vals.min() >= 0.0 and vals.max() < 1.0
        assert 0.4 < vals.mean() < 0.6
