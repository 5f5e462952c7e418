"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``."""
import numpy as np

OPEN = 0
CLOSE = 1
TOKEN = 2

_BREAK = frozenset("[]")


def tokenize(text):
    n = len(text)
    i = 0
    out = []
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c == "[":
            start = i
            i += 1
            while i < n and text[i].isspace():
                i += 1
            label_start = i
            while i < n and not (text[i].isspace() or text[i] in _BREAK):
                i += 1
            out.append((OPEN, text[label_start:i], start))
        elif c == "]":
            out.append((CLOSE, None, i))
            i += 1
        else:
            start = i
            while i < n and not (text[i].isspace() or text[i] in _BREAK):
                i += 1
            out.append((TOKEN, text[start:i], start))
    return out


def accumulate(frames, total, comp):
    """Neumaier-compensated running sum of ``frames`` rows, vectorized over dims."""
    if total.shape[0] != frames.shape[1] or comp.shape[0] != frames.shape[1]:
        raise ValueError("accumulator length does not match frame dim")
    rows = frames.astype(np.float64)
    for x in rows:
        t = total + x
        big = np.abs(total) >= np.abs(x)
        comp += np.where(big, (total - t) + x, (x - t) + total)
        total[:] = t
