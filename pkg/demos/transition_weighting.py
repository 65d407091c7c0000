# P2 elements, p = 5, fine region [2, 2.4] with its interface on the pulse
# maximum.  The abrupt coarse/fine split loses half an order in H1; spreading
# the transition over s ~ 0.1/h layers recovers it.
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from lflts.experiments import convergenceStudy, scenarioShiftedFine

hs = [0.005, 0.0025, 0.00125, 0.000625]

for w, style in (("abrupt", "o-"), ("weighted", "s--")):
    rep = convergenceStudy(scenarioShiftedFine("across"), hs, weighting=w)
    print(f"{w:9s} H1 slope {rep.slope_h1:.2f}   L2 slope {rep.slope_l2:.2f}")
    plt.loglog(hs, rep.err_h1, style, label=w)

plt.xlabel("h_c")
plt.ylabel("relative H1 error")
plt.legend()
plt.savefig("transition_weighting.svg")
