def frame_sample(clip, n: int) -> list:
    """``n`` frame indices spread evenly over the clip, both ends included, duplicates removed."""
    n_frames = clip if isinstance(clip, int) else clip.n_frames
    if n < 1 or n_frames < 1:
        raise ValueError("need n >= 1 and at least one frame")
    if n == 1:
        return [0]
    out = []
    for i in range(n):
        f = int(round(i * (n_frames - 1) / (n - 1)))
        if not out or out[-1] != f:
            out.append(f)
    return out
