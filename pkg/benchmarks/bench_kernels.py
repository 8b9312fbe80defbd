"""Compare the compiled and pure-Python geometry kernels on typical desk-scale workloads.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from deixis.kernels import backends
from deixis.synth import GenConfig, generate_clip
from deixis.scene import surface_samples


def workloads(seed: int = 0):
    clip = generate_clip(seed, GenConfig())
    cam = clip.camera_track[0]
    boxes = clip.scene.boxes()
    target = clip.scene.objects[0]
    pts = surface_samples(target.bounds, 8)
    occ = np.array([o.bounds.as_row() for o in clip.scene.others(target.id)]).reshape(-1, 6)
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(200, 3))
    dirs[:, 2] = np.abs(dirs[:, 2]) + 0.5
    origin = np.asarray(cam.position)

    def rays(mod):
        for d in dirs:
            mod.ray_boxes(origin, d, boxes)

    def visibility(mod):
        for _ in range(20):
            mod.count_visible(pts, cam.position, cam.world_to_cam, cam.intrinsics, occ)

    return {"ray_boxes x200": rays, "count_visible x20": visibility}


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    mods = backends()
    print(f"{'workload':<20}" + "".join(f"{name:>12}" for name in mods) + f"{'speedup':>10}")
    for label, fn in workloads().items():
        times = {name: min(timeit.repeat(lambda: fn(m), number=1, repeat=args.repeat)) for name, m in mods.items()}
        row = f"{label:<20}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times.values())
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
