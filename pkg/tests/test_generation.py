"""Material encoding, the four-condition generation call, the end-to-end
transfer, and lighting-aware pairs -- all with the deterministic mocks."""

import numpy as np
import pytest

from conftest import random_blob_mask, random_image, rect_mask, solid_image
from matcast import kernels
from matcast.errors import (
    ContractError,
    EmptyMaskError,
    InvalidInputError,
)
from matcast.generation import (
    GenerationParams,
    MaterialEmbedding,
    MaterialExemplar,
    Pipeline,
    encode_material,
    generate,
    mock_modulation,
    transfer_lighting_aware,
    transfer_material,
)
from matcast.imaging import (
    DepthMap,
    ForegroundMask,
    InitMode,
    RasterImage,
    compose_init_image,
)
from matcast.perception import estimate_depth


def mean_color_oracle(image_data: np.ndarray) -> tuple[float, float, float]:
    """Brute-force per-region mean color on [0, 1]."""
    total = [0.0, 0.0, 0.0]
    h, w = image_data.shape[:2]
    for i in range(h):
        for j in range(w):
            for c in range(3):
                total[c] += image_data[i, j, c] / 255.0
    return tuple(t / (h * w) for t in total)


class TestExemplar:
    def test_crop_validation(self, rng):
        image = random_image(rng, 8, 8)
        MaterialExemplar(image=image, crop=(0, 0, 8, 8))
        with pytest.raises(InvalidInputError):
            MaterialExemplar(image=image, crop=(0, 0, 9, 8))
        with pytest.raises(InvalidInputError):
            MaterialExemplar(image=image, crop=(4, 4, 4, 8))
        with pytest.raises(InvalidInputError):
            MaterialExemplar(image=image, scale_hint=0.0)

    def test_cropped_region(self, rng):
        image = random_image(rng, 8, 10)
        ex = MaterialExemplar(image=image, crop=(2, 1, 6, 5))
        assert ex.cropped().data.shape == (4, 4, 3)
        assert np.array_equal(ex.cropped().data, image.data[1:5, 2:6])

    def test_digest_tracks_crop(self, rng):
        image = random_image(rng, 8, 8)
        whole = MaterialExemplar(image=image)
        cropped = MaterialExemplar(image=image, crop=(0, 0, 4, 8))
        assert whole.digest() != cropped.digest()


class TestParams:
    def test_defaults(self):
        params = GenerationParams()
        assert params.steps == 30
        assert params.guidance_scale == 5.0
        assert params.material_scale == 1.0
        assert params.geometry_scale == 1.0
        assert params.init_mode is InitMode.FOREGROUND_GRAYSCALE
        assert params.working_size == 1024

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            GenerationParams(seed=-1)
        with pytest.raises(InvalidInputError):
            GenerationParams(seed=2**64)
        with pytest.raises(InvalidInputError):
            GenerationParams(steps=0)
        with pytest.raises(InvalidInputError):
            GenerationParams(guidance_scale=-0.5)
        with pytest.raises(InvalidInputError):
            GenerationParams(material_scale=1.5)
        with pytest.raises(InvalidInputError):
            GenerationParams(working_size=100)

    def test_record_roundtrip_seed_as_string(self):
        params = GenerationParams(seed=2**63 + 11, working_size=64)
        record = params.to_record()
        assert record["seed"] == str(2**63 + 11)
        assert GenerationParams.from_record(record) == params


class TestEncodeMaterial:
    def test_deterministic(self, rng):
        ex = MaterialExemplar(image=random_image(rng, 8, 8))
        a, b = encode_material(ex), encode_material(ex)
        assert np.array_equal(a.vectors, b.vectors)
        assert a.source_digest == b.source_digest == ex.digest()

    def test_mock_vector_definition(self, rng):
        image = random_image(rng, 6, 6)
        ex = MaterialExemplar(image=image)
        emb = encode_material(ex)
        expected_mean = mean_color_oracle(image.data)
        assert emb.vectors.shape == (1, 4)
        assert np.allclose(emb.vectors[0][:3], expected_mean, atol=1e-12)
        assert emb.vectors[0][3] == pytest.approx(
            float(kernels.luma_bt601(image.data).std())
        )

    def test_crop_changes_embedding(self):
        data = np.zeros((4, 8, 3), dtype=np.uint8)
        data[:, :4] = (255, 0, 0)
        data[:, 4:] = (0, 0, 255)
        image = RasterImage(data)
        whole = encode_material(MaterialExemplar(image=image))
        left = encode_material(MaterialExemplar(image=image, crop=(0, 0, 4, 4)))
        assert not np.array_equal(whole.vectors, left.vectors)
        assert np.allclose(left.vectors[0][:3], mean_color_oracle(data[:, :4]), atol=1e-12)

    def test_embedding_validation(self):
        with pytest.raises(InvalidInputError):
            MaterialEmbedding(vectors=np.array([1.0, 2.0]), backend_id="x", source_digest="d")
        with pytest.raises(InvalidInputError):
            MaterialEmbedding(vectors=np.array([[np.inf]]), backend_id="x", source_digest="d")


def _generation_fixture(rng, size=32, seed=7):
    image = random_image(rng, size, size)
    mask = rect_mask(size, size, size // 4, 3 * size // 4, size // 4, 3 * size // 4)
    init = compose_init_image(image, mask)
    depth = estimate_depth(image)
    emb = encode_material(MaterialExemplar(image=solid_image(4, 4, (160, 40, 40))))
    params = GenerationParams(seed=seed, working_size=size)
    return emb, depth, init, mask, params


class TestGenerate:
    def test_deterministic_for_seed(self, rng):
        emb, depth, init, mask, params = _generation_fixture(rng)
        a = generate(emb, depth, init, mask, params)
        b = generate(emb, depth, init, mask, params)
        assert np.array_equal(a.data, b.data)
        c = generate(emb, depth, init, mask, GenerationParams(seed=8, working_size=32))
        assert not np.array_equal(a.data, c.data)

    def test_mock_expectation(self, rng):
        emb, depth, init, mask, params = _generation_fixture(rng)
        out = generate(emb, depth, init, mask, params)
        masked = mask.binary_view.astype(bool)
        init_luma = kernels.luma_bt601(init.data)
        expected = emb.vectors[0][:3] * init_luma[masked].mean()
        observed = out.data[masked].mean(axis=0) / 255.0
        assert np.abs(observed - expected).max() < 0.05

    def test_mock_masked_values_decompose(self, rng):
        emb, depth, init, mask, params = _generation_fixture(rng)
        out = generate(emb, depth, init, mask, params)
        masked = mask.binary_view.astype(bool)
        luma = kernels.luma_bt601(init.data)
        noise_rng = np.random.default_rng(params.seed)
        noise = noise_rng.integers(-5, 6, size=(32, 32, 3))
        for c in range(3):
            expected = np.clip(mock_modulation(emb.vectors[0][c], luma) + noise[:, :, c], 0, 255)
            assert np.array_equal(out.data[:, :, c][masked], expected[masked].astype(np.uint8))

    def test_zero_mask_returns_init(self, rng):
        emb, depth, init, _, params = _generation_fixture(rng)
        out = generate(emb, depth, init, ForegroundMask.empty(32, 32), params)
        assert np.array_equal(out.data, init.data)

    def test_extent_precondition(self, rng):
        emb, depth, init, mask, _ = _generation_fixture(rng)
        with pytest.raises(InvalidInputError):
            generate(emb, depth, init, mask, GenerationParams(seed=1, working_size=64))

    def test_incompatible_embedding(self, rng):
        _, depth, init, mask, params = _generation_fixture(rng)
        foreign = MaterialEmbedding(
            vectors=np.zeros((1, 4)), backend_id="other-encoder", source_digest="d"
        )
        with pytest.raises(ContractError):
            generate(foreign, depth, init, mask, params)


class TestTransferMaterial:
    def test_background_bit_identical(self, rng):
        image = random_image(rng, 40, 40)
        mask = rect_mask(40, 40, 10, 20, 10, 20)
        ex = MaterialExemplar(image=solid_image(4, 4, (10, 200, 30)))
        params = GenerationParams(seed=3, working_size=40)
        result = transfer_material(image, mask, ex, params, feather=4)
        alpha = kernels.feather_alpha(mask.binary_view, 4)
        outside = alpha == 0.0
        assert outside.any()
        assert np.array_equal(result.image.data[outside], image.data[outside])
        assert result.image.extent == image.extent

    def test_empty_mask_rejected(self, rng):
        image = random_image(rng, 16, 16)
        ex = MaterialExemplar(image=solid_image(2, 2, (1, 2, 3)))
        with pytest.raises(EmptyMaskError):
            transfer_material(image, ForegroundMask.empty(16, 16), ex, GenerationParams(seed=1))

    def test_deterministic_and_digest_stable(self, rng):
        image = random_image(rng, 24, 24)
        mask = rect_mask(24, 24, 6, 18, 6, 18)
        ex = MaterialExemplar(image=solid_image(3, 3, (200, 10, 10)))
        params = GenerationParams(seed=11, working_size=24)
        a = transfer_material(image, mask, ex, params)
        b = transfer_material(image, mask, ex, params)
        assert np.array_equal(a.image.data, b.image.data)
        assert a.request_digest == b.request_digest
        different = transfer_material(image, mask, ex, GenerationParams(seed=12, working_size=24))
        assert different.request_digest != a.request_digest

    def test_tiny_mask_local_change_only(self, rng):
        image = random_image(rng, 32, 32)
        data = np.zeros((32, 32))
        data[16, 16] = 1.0
        ex = MaterialExemplar(image=solid_image(2, 2, (255, 255, 255)))
        result = transfer_material(
            image, ForegroundMask(data), ex, GenerationParams(seed=2, working_size=32), feather=2
        )
        changed = np.any(result.image.data != image.data, axis=2)
        ys, xs = np.nonzero(changed)
        assert len(ys) > 0
        assert np.all((ys - 16) ** 2 + (xs - 16) ** 2 <= 9)

    def test_depth_digest_independent_of_exemplar(self, rng):
        image = random_image(rng, 24, 24)
        mask = rect_mask(24, 24, 4, 20, 4, 20)
        params = GenerationParams(seed=5, working_size=24)
        red = transfer_material(image, mask, MaterialExemplar(image=solid_image(2, 2, (255, 0, 0))), params)
        blue = transfer_material(image, mask, MaterialExemplar(image=solid_image(2, 2, (0, 0, 255))), params)
        assert red.condition_digests["depth"] == blue.condition_digests["depth"]
        assert red.condition_digests["embedding"] != blue.condition_digests["embedding"]

    def test_input_changes_depth_not_embedding(self, rng):
        mask = rect_mask(24, 24, 4, 20, 4, 20)
        ex = MaterialExemplar(image=solid_image(2, 2, (120, 80, 40)))
        params = GenerationParams(seed=5, working_size=24)
        first = transfer_material(random_image(rng, 24, 24), mask, ex, params)
        second = transfer_material(random_image(rng, 24, 24), mask, ex, params)
        assert first.condition_digests["depth"] != second.condition_digests["depth"]
        assert first.condition_digests["embedding"] == second.condition_digests["embedding"]

    def test_embedding_sensitivity_direction(self, rng):
        image = random_image(rng, 32, 32)
        mask = rect_mask(32, 32, 8, 24, 8, 24)
        params = GenerationParams(seed=9, working_size=32)
        red = transfer_material(image, mask, MaterialExemplar(image=solid_image(2, 2, (255, 0, 0))), params)
        blue = transfer_material(image, mask, MaterialExemplar(image=solid_image(2, 2, (0, 0, 255))), params)
        region = mask.binary_view.astype(bool)
        red_mean = red.image.data[region].mean(axis=0)
        blue_mean = blue.image.data[region].mean(axis=0)
        assert red_mean[0] > blue_mean[0]
        assert blue_mean[2] > red_mean[2]

    def test_progress_and_timings(self, rng):
        image = random_image(rng, 16, 16)
        mask = rect_mask(16, 16, 4, 12, 4, 12)
        ex = MaterialExemplar(image=solid_image(2, 2, (9, 9, 9)))
        stages = []
        result = transfer_material(
            image, mask, ex, GenerationParams(seed=1, working_size=16),
            progress=lambda stage, fraction: stages.append((stage, fraction)),
        )
        names = [s for s, _ in stages]
        assert names == ["encode", "depth", "compose", "fit", "generate", "paste"]
        fractions = [f for _, f in stages]
        assert fractions == sorted(fractions)
        assert set(result.timings) == set(names)

    def test_working_size_resample_path(self, rng):
        # non-identity placement: input extent differs from working size
        image = random_image(rng, 20, 40)
        mask = rect_mask(20, 40, 5, 15, 10, 30)
        ex = MaterialExemplar(image=solid_image(2, 2, (50, 150, 250)))
        result = transfer_material(image, mask, ex, GenerationParams(seed=4, working_size=32))
        assert result.image.extent == image.extent
        alpha = kernels.feather_alpha(mask.binary_view, 8)
        outside = alpha == 0.0
        assert np.array_equal(result.image.data[outside], image.data[outside])


class TestLightingAware:
    def _renders(self, rng, size=32):
        shading = np.linspace(0.3, 0.7, size)[None, :]
        base = np.broadcast_to(shading, (size, size))
        render_a = RasterImage.from_float(np.stack([base] * 3, axis=2))
        render_b = RasterImage.from_float(np.stack([base[:, ::-1]] * 3, axis=2))
        mask = rect_mask(size, size, 8, 24, 8, 24)
        return render_a, render_b, mask

    def test_identical_renders_identical_results(self, rng):
        render_a, _, mask = self._renders(rng)
        ex = MaterialExemplar(image=solid_image(2, 2, (128, 128, 128)))
        params = GenerationParams(seed=21, working_size=32)
        a, b = transfer_lighting_aware(render_a, render_a, mask, mask, ex, params)
        assert np.array_equal(a.image.data, b.image.data)
        assert a.pair_id == b.pair_id is not None

    def test_noise_component_shared_modulation_differs(self, rng):
        render_a, render_b, mask = self._renders(rng)
        ex = MaterialExemplar(image=solid_image(2, 2, (128, 128, 128)))
        params = GenerationParams(seed=33, working_size=32)
        a, b = transfer_lighting_aware(render_a, render_b, mask, mask, ex, params)
        emb = encode_material(ex)
        region = mask.binary_view.astype(bool)
        # interior pixels only: the feather band blends toward the input
        interior = kernels.feather_alpha(mask.binary_view, 8) == 1.0

        def recovered_noise(result, render):
            init = compose_init_image(render, mask)
            luma = kernels.luma_bt601(init.data)
            noise = np.empty((32, 32, 3))
            for c in range(3):
                noise[:, :, c] = result.image.data[:, :, c] - mock_modulation(emb.vectors[0][c], luma)
            return noise

        noise_a = recovered_noise(a, render_a)
        noise_b = recovered_noise(b, render_b)
        sel = region & interior
        assert np.abs(noise_a[sel] - noise_b[sel]).max() < 1e-6
        # while the modulation itself tracks each render
        assert not np.array_equal(a.image.data[sel], b.image.data[sel])

    def test_mismatched_seed_rejected(self, rng):
        render_a, render_b, mask = self._renders(rng)
        ex = MaterialExemplar(image=solid_image(2, 2, (1, 1, 1)))
        with pytest.raises(ContractError):
            transfer_lighting_aware(
                render_a, render_b, mask, mask, ex,
                GenerationParams(seed=1, working_size=32),
                params_b=GenerationParams(seed=2, working_size=32),
            )

    def test_chain_from_first(self, rng):
        render_a, render_b, mask = self._renders(rng)
        ex = MaterialExemplar(image=solid_image(2, 2, (128, 128, 128)))
        params = GenerationParams(seed=5, working_size=32)
        _, chained = transfer_lighting_aware(
            render_a, render_b, mask, mask, ex, params, chain_from_first=True
        )
        _, plain = transfer_lighting_aware(render_a, render_b, mask, mask, ex, params)
        assert not np.array_equal(chained.image.data, plain.image.data)

    def test_extent_mismatch(self, rng):
        render_a, _, mask = self._renders(rng)
        small = random_image(rng, 16, 16)
        ex = MaterialExemplar(image=solid_image(2, 2, (1, 1, 1)))
        with pytest.raises(InvalidInputError):
            transfer_lighting_aware(render_a, small, mask, mask, ex, GenerationParams(seed=1))


class TestPipeline:
    def test_wrapper_matches_function(self, rng):
        image = random_image(rng, 16, 16)
        mask = rect_mask(16, 16, 4, 12, 4, 12)
        ex = MaterialExemplar(image=solid_image(2, 2, (90, 90, 200)))
        params = GenerationParams(seed=6, working_size=16)
        via_pipeline = Pipeline().transfer(image, mask, ex, params)
        via_function = transfer_material(image, mask, ex, params)
        assert np.array_equal(via_pipeline.image.data, via_function.image.data)
        assert via_pipeline.request_digest == via_function.request_digest
