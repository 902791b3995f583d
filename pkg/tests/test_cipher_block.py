import itertools

import numpy as np
import pytest

from pixelcrypt.cipher_block import (
    BlockKey,
    EtcCodes,
    TanakaKey,
    derive_etc_codes,
    etc_apply,
    etc_decrypt,
    etc_encrypt,
    etc_invert,
    tanaka_decrypt,
    tanaka_encrypt,
)
from pixelcrypt.image import PlanarImage

from _helpers import random_image


class TestTanakaKey:
    def test_from_seed_deterministic_and_valid(self):
        a = TanakaKey.from_seed(123)
        b = TanakaKey.from_seed(123)
        assert np.array_equal(a.reversal_mask, b.reversal_mask)
        assert np.array_equal(a.permutation, b.permutation)
        assert np.array_equal(np.sort(a.permutation), np.arange(96))
        assert set(np.unique(a.reversal_mask)) <= {0, 1}

    def test_inverse_permutation_composes_to_identity(self):
        key = TanakaKey.from_seed(5)
        inv = np.argsort(key.permutation)
        assert np.array_equal(key.permutation[inv], np.arange(96))
        assert np.array_equal(inv[key.permutation], np.arange(96))

    def test_invalid_fields_rejected(self):
        with pytest.raises(ValueError):
            TanakaKey(seed=0, reversal_mask=np.zeros(95, dtype=np.uint8), permutation=np.arange(96))
        with pytest.raises(ValueError):
            TanakaKey(seed=0, reversal_mask=np.zeros(96, dtype=np.uint8), permutation=np.zeros(96, dtype=np.int64))


class TestTanakaCipher:
    def test_identity_key_is_identity(self, rng):
        img = random_image(rng, 8, 8)
        assert tanaka_encrypt(img, TanakaKey.identity()) == img

    def test_round_trip(self, rng):
        for _ in range(100):
            w, h = 4 * int(rng.integers(1, 9)), 4 * int(rng.integers(1, 9))
            img = random_image(rng, w, h)
            key = TanakaKey.from_seed(int(rng.integers(0, 2**63)))
            assert tanaka_decrypt(tanaka_encrypt(img, key), key) == img

    def test_uniform_gray_block_fixed_by_any_zero_mask_key(self):
        # All 96 nibble values equal 8, so permutation alone cannot move anything.
        key = TanakaKey(
            seed=0,
            reversal_mask=np.zeros(96, dtype=np.uint8),
            permutation=TanakaKey.from_seed(777).permutation,
        )
        gray = PlanarImage(np.full((3, 4, 4), 0x88, dtype=np.uint8))
        assert tanaka_encrypt(gray, key) == gray

    def test_shared_pattern_across_blocks(self, rng):
        block = rng.integers(0, 256, size=(3, 4, 4), dtype=np.uint8)
        img = PlanarImage(np.concatenate([block, block], axis=2))
        enc = tanaka_encrypt(img, TanakaKey.from_seed(31337))
        assert np.array_equal(enc.planes[:, :, :4], enc.planes[:, :, 4:])

    def test_wrong_seed_does_not_decrypt(self, rng):
        img = random_image(rng, 8, 8)
        enc = tanaka_encrypt(img, TanakaKey.from_seed(1))
        assert tanaka_decrypt(enc, TanakaKey.from_seed(2)) != img

    @pytest.mark.parametrize("w,h", [(30, 32), (32, 30), (6, 6)])
    def test_non_divisible_dimensions_rejected(self, rng, w, h):
        img = random_image(rng, w, h)
        key = TanakaKey.from_seed(0)
        with pytest.raises(ValueError):
            tanaka_encrypt(img, key)
        with pytest.raises(ValueError):
            tanaka_decrypt(img, key)

    def test_nibble_reversal_uses_masked_positions(self):
        # Mask everything: v -> 15 - v on both nibbles means p -> 255 - p.
        key = TanakaKey(
            seed=0,
            reversal_mask=np.ones(96, dtype=np.uint8),
            permutation=np.arange(96, dtype=np.int64),
        )
        img = PlanarImage(np.full((3, 4, 4), 0x12, dtype=np.uint8))
        enc = tanaka_encrypt(img, key)
        assert (enc.planes == 0xED).all()


class TestEtcCodes:
    def test_block_permutation_covers_all_64_blocks(self):
        codes = derive_etc_codes(BlockKey(seed=9), 32, 32)
        assert np.array_equal(np.sort(codes.block_perm), np.arange(64))
        assert codes.rotations.min() >= 0 and codes.rotations.max() <= 3
        assert set(np.unique(codes.flips_h)) <= {0, 1}
        assert set(np.unique(codes.flips_v)) <= {0, 1}
        assert codes.neg_mask.shape == (64, 3)
        assert codes.color_codes.min() >= 0 and codes.color_codes.max() <= 5

    def test_deterministic(self):
        a = derive_etc_codes(BlockKey(seed=4), 16, 16)
        b = derive_etc_codes(BlockKey(seed=4), 16, 16)
        assert np.array_equal(a.block_perm, b.block_perm)
        assert np.array_equal(a.color_codes, b.color_codes)

    def test_non_square_blocks_rejected(self):
        with pytest.raises(ValueError):
            BlockKey(seed=0, block_w=4, block_h=2)


class TestEtcCipher:
    def test_identity_codes_are_identity(self, rng):
        img = random_image(rng, 16, 16)
        out = etc_apply(img.planes, EtcCodes.identity(16), block=4)
        assert np.array_equal(out, img.planes)
        back = etc_invert(img.planes, EtcCodes.identity(16), block=4)
        assert np.array_equal(back, img.planes)

    def test_round_trip(self, rng):
        for _ in range(100):
            w, h = 4 * int(rng.integers(1, 9)), 4 * int(rng.integers(1, 9))
            img = random_image(rng, w, h)
            key = BlockKey(seed=int(rng.integers(0, 2**63)))
            assert etc_decrypt(etc_encrypt(img, key), key) == img

    def test_wrong_seed_does_not_decrypt(self, rng):
        img = random_image(rng, 16, 16)
        enc = etc_encrypt(img, BlockKey(seed=10))
        assert etc_decrypt(enc, BlockKey(seed=11)) != img

    def test_non_divisible_dimensions_rejected(self, rng):
        img = random_image(rng, 30, 30)
        with pytest.raises(ValueError):
            etc_encrypt(img, BlockKey(seed=0))

    def test_position_tracing_matches_block_permutation(self):
        # Block (gy, gx) is filled with its flat index across all channels;
        # rotation/flip fix constant blocks, negpos maps v to 255-v, and the
        # color permutation shuffles equal channels, so min(v, 255-v)
        # recovers the source index of every output block.
        key = BlockKey(seed=2024)
        arr = np.zeros((3, 32, 32), dtype=np.uint8)
        for gy in range(8):
            for gx in range(8):
                arr[:, 4 * gy : 4 * gy + 4, 4 * gx : 4 * gx + 4] = gy * 8 + gx
        enc = etc_encrypt(PlanarImage(arr), key)
        codes = derive_etc_codes(key, 32, 32)
        for g in range(64):
            gy, gx = divmod(g, 8)
            block = enc.planes[:, 4 * gy : 4 * gy + 4, 4 * gx : 4 * gx + 4]
            per_channel = {int(v) for v in np.unique(block)}
            origins = {min(v, 255 - v) for v in per_channel}
            assert origins == {int(codes.block_perm[g])}

    def test_block_multiset_preserved_up_to_substeps(self, rng):
        # Canonical form = lexicographic minimum over the 768 per-block
        # sub-step variants (4 rots x 2 x 2 flips x 8 channel complements x
        # 6 color permutations).
        from pixelcrypt.cipher_pixel import _PERM_SRC

        def canonical(block):
            best = None
            for rot in range(4):
                r = np.rot90(block, rot, axes=(1, 2))
                for fh, fv in itertools.product(range(2), range(2)):
                    f = r[:, :, ::-1] if fh else r
                    f = f[:, ::-1, :] if fv else f
                    for neg in range(8):
                        mask = np.array(
                            [[neg >> 2 & 1], [neg >> 1 & 1], [neg & 1]], dtype=np.uint8
                        )[:, :, None]
                        n = f ^ (mask * np.uint8(255))
                        for code in range(6):
                            cand = n[_PERM_SRC[code]].tobytes()
                            if best is None or cand < best:
                                best = cand
            return best

        def block_multiset(arr):
            out = []
            for gy in range(arr.shape[1] // 4):
                for gx in range(arr.shape[2] // 4):
                    out.append(canonical(arr[:, 4 * gy : 4 * gy + 4, 4 * gx : 4 * gx + 4]))
            return sorted(out)

        img = random_image(rng, 16, 16)
        enc = etc_encrypt(img, BlockKey(seed=77))
        assert block_multiset(img.planes) == block_multiset(enc.planes)
