# Regenerates reference_values.inc from PyWavelets and POT.
import numpy as np
import ot
import pywt


def img(n, a, b):
    r, c = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return np.sin(a * r) + np.cos(b * c) + r * c / 100.0


def dens(n, s):
    r, c = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    v = 1.0 + np.sin(s * r + 0.5 * c) ** 2 + (r == (s * 3) % n) * 2.0
    return v / v.sum()


out = ["// Generated by make_reference.py; do not edit.", ""]
out.append("// {size, levels, mode, band} -> {sum, abs_sum, first, last}; band 0 is the approximation,")
out.append("// then levels coarsest to finest in H, V, D order.")
out.append("struct BandRef { int size; int levels; const char* mode; double sum, abs_sum, first, last; };")
out.append("inline const BandRef kBandRefs[] = {")
for mode in ("zero", "symmetric"):
    for n, lev in ((16, 3), (64, 6)):
        co = pywt.wavedec2(img(n, 0.3, 0.7), "sym5", mode=mode, level=lev)
        bands = [co[0]] + [b for d in co[1:] for b in d]
        for b in bands:
            out.append(f'    {{{n}, {lev}, "{mode}", {float(b.sum())!r}, {float(np.abs(b).sum())!r}, {float(b[0, 0])!r}, {float(b[-1, -1])!r}}},')
out.append("};")
out.append("")
n = 8
ps = 2.0 / n
r, c = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
pos = np.stack([c.ravel(), r.ravel()], 1) * ps
m1 = ot.dist(pos, pos, metric="euclidean")
m2 = ot.dist(pos, pos, metric="sqeuclidean")
out.append("// dens(8, s) vs dens(8, s + 0.37), pixel_size 0.25: {s, p=1 objective, p=2 objective}")
out.append("struct TransportRef { double s, w1, w2; };")
out.append("inline const TransportRef kTransportRefs[] = {")
for s in (1, 2, 3):
    a = dens(n, s).ravel()
    b = dens(n, s + 0.37).ravel()
    out.append(f"    {{{s}, {float(ot.emd2(a, b, m1, numItermax=10**7))!r}, {float(ot.emd2(a, b, m2, numItermax=10**7))!r}}},")
out.append("};")
open("reference_values.inc", "w").write("\n".join(out) + "\n")
