# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: bracket tokenization and compensated frame summation.

Behaviour must stay identical to ``_kernels_py``.
"""

DEF OPEN = 0
DEF CLOSE = 1
DEF TOKEN = 2


cpdef list tokenize(str text):
    cdef Py_ssize_t n = len(text)
    cdef Py_ssize_t i = 0, start, label_start
    cdef Py_UCS4 c
    cdef list out = []
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c == u'[':
            start = i
            i += 1
            while i < n and (<Py_UCS4>text[i]).isspace():
                i += 1
            label_start = i
            while i < n:
                c = text[i]
                if c.isspace() or c == u'[' or c == u']':
                    break
                i += 1
            out.append((OPEN, text[label_start:i], start))
        elif c == u']':
            out.append((CLOSE, None, i))
            i += 1
        else:
            start = i
            while i < n:
                c = text[i]
                if c.isspace() or c == u'[' or c == u']':
                    break
                i += 1
            out.append((TOKEN, text[start:i], start))
    return out


cpdef void accumulate(const float[:, ::1] frames, double[::1] total, double[::1] comp):
    """Neumaier-compensated running sum of ``frames`` rows into ``total``/``comp``."""
    cdef Py_ssize_t n_rows = frames.shape[0], dim = frames.shape[1]
    cdef Py_ssize_t r, d
    cdef double x, s, t
    if total.shape[0] != dim or comp.shape[0] != dim:
        raise ValueError("accumulator length does not match frame dim")
    with nogil:
        for r in range(n_rows):
            for d in range(dim):
                x = frames[r, d]
                s = total[d]
                t = s + x
                if (s if s >= 0 else -s) >= (x if x >= 0 else -x):
                    comp[d] += (s - t) + x
                else:
                    comp[d] += (x - t) + s
                total[d] = t
