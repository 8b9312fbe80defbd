import json
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deixis.errors import ConfigInvalid, NoEligibleTarget, NoValidViewpoint, UnreachableTarget
from deixis.hand import INDEX_MCP, INDEX_TIP, HandPose, HandTrack, build_hand
from deixis.resolver import pointing_ray
from deixis.scene import Aabb, CameraPose, Ray, Scene, SceneObject, ray_aabb_intersect, visible_fraction
from deixis.synth import (
    ClipRecord,
    GenConfig,
    GestureSpec,
    eligible_targets,
    forge_clips,
    generate_clip,
    quality_filter,
    sample_scene,
    sample_viewpoint,
    select_target,
    synthesize_gesture,
)

ATTRS = {"color": "red", "shape": "round", "material": "ceramic", "state": "empty"}
BACKWARD = (0.0, 0.0, 1.0, 0.0)  # half turn about y: the camera looks along -z


def box_at(center, size=0.1):
    return Aabb.from_center(center, (size, size, size))


def scene_of(*centers, size=0.1):
    objs = [SceneObject(f"mug_{i}", "mug", dict(ATTRS, color=c), box_at(p, size))
            for i, (p, c) in enumerate(zip(centers, ("red", "blue", "green", "white", "black")))]
    return Scene("s", tuple(objs))


def world_hold_rays(clip, gesture):
    for f in range(gesture.hold_start, gesture.hold_end + 1):
        pose, cam = clip.hand_track.poses[f], clip.camera_track[f]
        ray = pointing_ray(pose)
        yield f, Ray(cam.to_world(ray.origin), cam.direction_to_world(ray.direction))


# ---------------------------------------------------------------- scenes


def test_scene_deterministic():
    a = json.dumps(sample_scene(7).to_dict(), sort_keys=True)
    b = json.dumps(sample_scene(7).to_dict(), sort_keys=True)
    assert a == b
    assert a != json.dumps(sample_scene(8).to_dict(), sort_keys=True)


def test_scene_needs_three_objects():
    with pytest.raises(ConfigInvalid):
        sample_scene(0, replace(GenConfig(), min_objects=2))


def test_scene_object_count_distribution():
    cfg = GenConfig()
    counts = [len(sample_scene(s, cfg).objects) for s in range(1000)]
    assert all(cfg.min_objects <= n <= cfg.max_objects for n in counts)
    mid = (cfg.min_objects + cfg.max_objects) / 2
    assert abs(np.mean(counts) - mid) <= 0.1 * mid


def test_scene_objects_rest_on_table_without_overlap():
    for s in range(50):
        scene = sample_scene(s)
        boxes = scene.boxes()
        for i in range(len(boxes)):
            for j in range(i + 1, len(boxes)):
                a, b = boxes[i], boxes[j]
                overlap = all(a[k] < b[k + 3] and b[k] < a[k + 3] for k in range(3))
                assert not overlap


# ---------------------------------------------------------------- viewpoints and targets


def test_viewpoint_fails_with_one_object_in_reach():
    # one object on the desk, two far behind the wearer: three visible objects cannot be found
    scene = scene_of((0.0, 0.3, 1.0), (0.0, 0.3, -3.0), (0.3, 0.3, -3.0))
    with pytest.raises(NoValidViewpoint):
        sample_viewpoint(scene, 0)


def test_viewpoint_success_on_crowded_desk():
    cfg = replace(GenConfig(), min_objects=10, max_objects=10)
    scene = sample_scene(3, cfg)
    assert len(scene.objects) == 10
    ok = 0
    for seed in range(100):
        try:
            cam = sample_viewpoint(scene, seed, cfg)
        except NoValidViewpoint:
            continue
        ok += 1
        vis = [visible_fraction(o, cam, scene.others(o.id)) for o in scene.objects]
        assert sum(v > 0.1 for v in vis) >= 3
    assert ok > 95


def test_no_target_within_reach():
    scene = scene_of((-0.3, 0, 3.0), (0, 0, 3.0), (0.3, 0, 3.0))
    with pytest.raises(NoEligibleTarget):
        select_target(scene, CameraPose(), 0)


def test_single_eligible_target_always_chosen():
    scene = scene_of((0, 0, 1.0), (-0.3, 0, 3.0), (0.3, 0, 3.0))
    assert {select_target(scene, CameraPose(), s) for s in range(50)} == {"mug_0"}


def test_target_choice_uniform():
    scene = scene_of((-0.3, 0, 1.0), (-0.1, 0, 1.2), (0.1, 0, 1.0), (0.3, 0, 1.2))
    cam = CameraPose()
    assert len(eligible_targets(scene, cam)) == 4
    n = 10_000
    counts = {o.id: 0 for o in scene.objects}
    for s in range(n):
        counts[select_target(scene, cam, s)] += 1
    expected = n / 4
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    assert chi2 < 16.27  # df = 3, p = 0.001


# ---------------------------------------------------------------- gestures


def straight_track(n=90):
    return tuple(CameraPose() for _ in range(n))


def test_gesture_hits_target_ahead():
    scene = scene_of((0.0, 0.0, 1.0), (-0.45, 0.0, 1.0), (0.45, 0.0, 1.0))
    spec = GestureSpec("mug_0", 15, 80, 10)
    seg = synthesize_gesture(scene, straight_track(), spec, 5)
    assert [p.frame_index for p in seg][0] == 5
    hold = [p for p in seg if spec.hold_start <= p.frame_index <= spec.hold_end]
    assert len(hold) == spec.hold_frames
    for pose in hold:
        assert ray_aabb_intersect(pointing_ray(pose), scene.get("mug_0").bounds) is not None


def test_gesture_target_behind_camera():
    scene = scene_of((0.0, 0.0, -1.0), (-0.45, 0.0, 1.0), (0.45, 0.0, 1.0))
    with pytest.raises(UnreachableTarget):
        synthesize_gesture(scene, straight_track(), GestureSpec("mug_0", 15, 80, 10), 0)


def test_short_hold_rejected():
    scene = scene_of((0.0, 0.0, 1.0), (-0.45, 0.0, 1.0), (0.45, 0.0, 1.0))
    with pytest.raises(ConfigInvalid):
        synthesize_gesture(scene, straight_track(), GestureSpec("mug_0", 15, 30, 5), 0)


def test_jitter_stays_inside_bound(forged):
    limit = GenConfig().jitter_deg
    for clip in forged.clips[:20]:
        for g in clip.gestures:
            box = clip.scene.get(g.target_id).bounds
            for f, ray in world_hold_rays(clip, g):
                to_c = np.asarray(box.center) - np.asarray(ray.origin)
                dist = np.linalg.norm(to_c)
                ang = math.degrees(math.acos(min(1.0, float(np.dot(to_c / dist, ray.direction)))))
                radius = math.degrees(math.atan(0.5 * np.linalg.norm(box.extent) / dist))
                assert ang <= limit + 0.5 * radius + 1e-9


def test_noiseless_hold_points_at_centroid():
    clip = generate_clip(4, GenConfig().noiseless())
    for g in clip.gestures:
        c = np.asarray(clip.scene.get(g.target_id).centroid)
        for _, ray in world_hold_rays(clip, g):
            to_c = c - np.asarray(ray.origin)
            assert np.dot(to_c / np.linalg.norm(to_c), ray.direction) == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------- clips


def test_clip_deterministic():
    a = json.dumps(generate_clip(21).to_dict(), sort_keys=True)
    b = json.dumps(generate_clip(21).to_dict(), sort_keys=True)
    assert a == b


def test_clip_round_trip(forged):
    clip = forged.clips[0]
    again = ClipRecord.from_dict(json.loads(json.dumps(clip.to_dict())))
    assert json.dumps(again.to_dict(), sort_keys=True) == json.dumps(clip.to_dict(), sort_keys=True)


def test_forged_clip_invariants(forged):
    cfg = GenConfig()
    dwell = math.ceil(cfg.dwell_min_s * cfg.fps - 1e-9)
    for clip in forged.clips:
        assert len(clip.camera_track) == clip.n_frames == len(clip.hand_track)
        assert clip.n_frames >= cfg.clip_len_s[0] * cfg.fps
        starts = [g.hold_start for g in clip.gestures]
        assert starts == sorted(starts)
        for a, b in zip(clip.gestures, clip.gestures[1:]):
            assert a.hold_end < b.hold_start
        for g in clip.gestures:
            assert g.hold_frames >= dwell
            for f, ray in world_hold_rays(clip, g):
                assert ray_aabb_intersect(ray, clip.scene.get(g.target_id).bounds) is not None, (clip.clip_id, f)
        assert quality_filter(clip).accept


def test_forge_independent_of_workers():
    one = forge_clips(5, 6, jobs=1)
    two = forge_clips(5, 6, jobs=2)
    assert [c.clip_id for c in one.clips] == [c.clip_id for c in two.clips]
    assert [json.dumps(c.to_dict()) for c in one.clips] == [json.dumps(c.to_dict()) for c in two.clips]
    assert one.rejects == two.rejects
    assert one.attempts == len(one.clips) + len(one.rejects)


def test_forge_rejects_negative_count():
    with pytest.raises(ConfigInvalid):
        forge_clips(0, -1)


# ---------------------------------------------------------------- quality filter


def filter_clip(n, visible, confident):
    """``n`` frames; the target is in view for the first ``visible`` and the hand confident for the first ``confident``."""
    scene = scene_of((0.0, 0.0, 1.0), (-0.3, 0.0, 1.0), (0.3, 0.0, 1.0))
    cams = [CameraPose() if f < visible else CameraPose(orientation=BACKWARD) for f in range(n)]
    keypoints = build_hand((0.05, 0.2, 0.4), (0.0, -0.2, 0.6))
    poses = tuple(HandPose(keypoints, 0.9 if f < confident else 0.1, f) for f in range(n))
    return ClipRecord("c", scene, cams, HandTrack(poses, 30.0), (GestureSpec("mug_0", 0, n - 1),), 30.0, n, 0)


def test_filter_rejects_target_seen_in_40_percent():
    r = quality_filter(filter_clip(100, 40, 100))
    assert not r.accept and r.reasons == ("target-visibility",)
    assert r.target_fractions["mug_0"] == pytest.approx(0.4)


def test_filter_accepts_hand_in_61_percent():
    r = quality_filter(filter_clip(100, 100, 61))
    assert r.accept and r.reasons == ()


def test_filter_boundaries():
    r = quality_filter(filter_clip(100, 50, 60))
    assert r.reasons == ("hand-visibility",)
    both = quality_filter(filter_clip(100, 10, 20))
    assert both.reasons == ("target-visibility", "hand-visibility")


@settings(max_examples=40, deadline=None)
@given(
    visible=st.integers(0, 20), confident=st.integers(0, 20),
    t=st.floats(0, 1), h=st.floats(0, 1), dt=st.floats(0, 1), dh=st.floats(0, 1),
)
def test_filter_monotone_in_thresholds(visible, confident, t, h, dt, dh):
    clip = filter_clip(20, visible, confident)
    strict = quality_filter(clip, target_min=t, hand_min=h)
    loose = quality_filter(clip, target_min=t * (1 - dt), hand_min=h * (1 - dh))
    assert not (strict.accept and not loose.accept)


def test_config_validation():
    with pytest.raises(ConfigInvalid):
        replace(GenConfig(), fps=0).validate()
    with pytest.raises(ConfigInvalid):
        replace(GenConfig(), hold_s=(1.0, 2.0)).validate()
    with pytest.raises(ConfigInvalid):
        replace(GenConfig(), max_gestures=4).validate()
