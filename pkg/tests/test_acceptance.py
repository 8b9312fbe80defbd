"""Headline acceptance checks; each test prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""
import json
import pathlib
import time
import numpy as np
import pytest

from deixis.evaluation import (
    BlindAnswerer,
    ChoicesOnlyAnswerer,
    GeometricOracle,
    bias_probe,
    extract_choice,
    frame_sample,
    random_baseline,
)
from deixis.evaluation.sweep import DEFAULT_TAUS, is_monotone_nonincreasing, tau_sweep
from deixis.hint import AdapterParams, GateConfig, VisualTokenBlock, adapter_forward, interleave, token_overhead
from deixis.hint.ablation import AblationConfig, run_ablation
from deixis.hint.checks import check_backward, check_forward, check_toy_gradient
from deixis.qa import QAConfig, TaskCategory, clip_questions
from deixis.resolver import pointing_ray, resolve_referents
from deixis.scene import Ray, ray_aabb_intersect
from deixis.synth import GenConfig, forge_clips

SEED = 2024
N_CLIPS = 500


def verdict(capsys, name, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def batch():
    t0 = time.perf_counter()
    forged = forge_clips(SEED, N_CLIPS, GenConfig())
    return forged, time.perf_counter() - t0


@pytest.fixture(scope="module")
def items(batch):
    t0 = time.perf_counter()
    cfg = QAConfig(seed=SEED)
    out = [it for c in batch[0].clips for it in clip_questions(c, cfg).items]
    return out, time.perf_counter() - t0


def test_random_baseline(items, capsys):
    data, _ = items
    t0 = time.perf_counter()
    rep = random_baseline(data)
    secs = time.perf_counter() - t0
    five = [TaskCategory.REFERENCE, TaskCategory.TEMPORAL, TaskCategory.COUNTING, TaskCategory.ATTRIBUTE]
    assert all(len(i.options) == 5 for i in data if i.category in five)
    assert all(len(i.options) == 2 for i in data if i.category is TaskCategory.FEEDBACK)
    spatial = [i for i in data if i.category is TaskCategory.SPATIAL]
    analytic = 100 * sum(1 / len(i.options) for i in spatial) / len(spatial)
    got = {c.value: rep.accuracy(c) for c in TaskCategory}
    ok = (all(got[c.value] == 20.0 for c in five) and got["Feedback"] == 50.0
          and got["Spatial"] == pytest.approx(analytic, abs=1e-9) and secs < 1.0)
    verdict(capsys, "random-baseline", ok, f"{ {k: round(v, 3) for k, v in got.items()} } in {secs:.3f}s")


def test_oracle_end_to_end(batch, items, capsys):
    forged, forge_s = batch
    data, qa_s = items
    clips = {c.clip_id: c for c in forged.clips}
    t0 = time.perf_counter()
    rep = bias_probe(data, GeometricOracle(), clips=clips)
    oracle_s = time.perf_counter() - t0
    worst = min(v["accuracy"] for v in rep.per_category.values())
    ok = len(data) >= 600 and worst == 100.0 and rep.invalid_count == 0 and qa_s + oracle_s < 30
    verdict(capsys, "oracle-end-to-end", ok,
            f"{len(data)} items, min category {worst}, qa {qa_s:.1f}s + oracle {oracle_s:.1f}s (forge {forge_s:.1f}s)")


def test_gesture_soundness(batch, capsys):
    forged, forge_s = batch
    t0 = time.perf_counter()
    frames = misses = 0
    for clip in forged.clips:
        for g in clip.gestures:
            box = clip.scene.get(g.target_id).bounds
            for f in range(g.hold_start, g.hold_end + 1):
                cam = clip.camera_track[f]
                ray = pointing_ray(clip.hand_track.poses[f])
                world = Ray(cam.to_world(ray.origin), cam.direction_to_world(ray.direction))
                frames += 1
                misses += ray_aabb_intersect(world, box) is None
    secs = forge_s + time.perf_counter() - t0
    ok = len(forged.clips) == N_CLIPS and misses == 0 and secs < 60
    verdict(capsys, "gesture-soundness", ok, f"{frames - misses}/{frames} hold frames hit, {secs:.1f}s")


def exact_rate(clips):
    return sum([r[0] for r in resolve_referents(c)] == c.referents for c in clips) / len(clips)


def test_resolver_fidelity(batch, capsys):
    noisy = exact_rate(batch[0].clips)
    clean = exact_rate(forge_clips(SEED + 1, N_CLIPS, GenConfig().noiseless()).clips)
    ok = clean == 1.0 and noisy >= 0.99
    verdict(capsys, "resolver-fidelity", ok, f"noiseless {100 * clean:.1f}%, default noise {100 * noisy:.1f}%")


def test_adapter_numerics(capsys):
    t0 = time.perf_counter()
    fwd, bwd, toy = check_forward(100), check_backward(100), check_toy_gradient()
    secs = time.perf_counter() - t0
    ok = not (fwd or bwd or toy) and secs < 10
    verdict(capsys, "adapter-numerics", ok,
            f"failures forward {len(fwd)}, backward {len(bwd)}, toy {len(toy)}; {secs:.1f}s")


def test_gating_and_interleaving(batch, capsys):
    rng = np.random.default_rng(SEED)
    params = AdapterParams.init(4, 8)
    bad = 0
    for _ in range(100):
        tau = float(rng.uniform())
        confs = rng.uniform(size=100)
        confs[:5] = tau  # exercise the boundary
        hands = [adapter_forward(params, rng.normal(size=(21, 3)), float(c), GateConfig(tau)) for c in confs]
        seq = interleave([], [VisualTokenBlock(f, np.zeros((1, 8))) for f in range(100)], hands)
        keyed = set(seq.key_frames)
        bad += sum((f in keyed) != (c >= tau) for f, c in enumerate(confs))
    counts = tau_sweep(batch[0].clips, DEFAULT_TAUS)
    ok = bad == 0 and is_monotone_nonincreasing(counts)
    verdict(capsys, "gating-interleaving", ok, f"10000 frames, {bad} gate violations; key counts {list(counts.values())}")


def test_token_overhead(batch, items, capsys):
    # real gate decisions at tau = 0.5 on the 32-frame samples, question text included
    params = AdapterParams.init(4, 8)
    gate = GateConfig(0.5)
    questions = {}
    for it in items[0]:
        questions.setdefault(it.clip_id, len(it.question.split()))
    worst = {64: 0.0, 256: 0.0}
    for clip in batch[0].clips:
        frames = frame_sample(clip, 32)
        hands = [adapter_forward(params, clip.hand_track.poses[f].keypoints, clip.hand_track.poses[f].confidence, gate)
                 for f in frames]
        text = [np.zeros(8)] * questions.get(clip.clip_id, 0)
        for n_vis in worst:
            seq = interleave(text, [VisualTokenBlock(f, np.zeros((n_vis, 8))) for f in frames], hands)
            worst[n_vis] = max(worst[n_vis], token_overhead(seq))
    ok = all(v < 0.01 for v in worst.values())
    verdict(capsys, "token-overhead", ok, "max over clips " + ", ".join(f"{v:.4f} at {n} visual/frame" for n, v in worst.items()))


def test_hand_ablation(capsys):
    result = run_ablation(AblationConfig())
    n = result.n_train + result.n_test
    on, off = result.hint_on.report.average, result.hint_off.report.average
    chance = result.chance.average
    ok = n >= 2000 and result.seconds <= 300 and result.gap >= 20 and abs(off - chance) <= 10
    verdict(capsys, "hand-ablation", ok,
            f"{n} items, hint-on {on:.1f}, hint-off {off:.1f}, random {chance:.1f}, gap {result.gap:.1f}, "
            f"{result.seconds:.0f}s")


def test_extraction_goldens(capsys):
    goldens = json.loads((pathlib.Path(__file__).parent / "data" / "extract_goldens.json").read_text())
    wrong = [g for g in goldens if extract_choice(g["raw"], g["n"]) != g["want"]]
    verdict(capsys, "extraction-goldens", len(goldens) == 30 and not wrong, f"{30 - len(wrong)}/30 cases")


@pytest.mark.parametrize("answerer", [BlindAnswerer(), ChoicesOnlyAnswerer()], ids=["blind", "choices-only"])
def test_bias_probes(items, answerer, capsys):
    data, _ = items
    rep = bias_probe(data, answerer)
    chance = random_baseline(data)
    gaps = {k: v["accuracy"] - chance.per_category[k]["accuracy"] for k, v in rep.per_category.items()}
    worst = max(abs(g) for g in gaps.values())
    verdict(capsys, f"bias-probe-{answerer.name}", worst <= 7,
            f"max deviation {worst:.1f}: { {k: round(g, 1) for k, g in gaps.items()} }")
