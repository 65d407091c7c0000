# Gaussian pulse on (0, 4), P1 elements, fine region [1.6, 2.4] with p = 2.
# Compares LF-LTS(0.01) against split-LFC, which samples the source only at
# the global time levels.
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from lflts.experiments import convergenceStudy, scenarioGaussianPulse

hs = [0.04, 0.02, 0.01, 0.005]
sc = scenarioGaussianPulse()

lts = convergenceStudy(sc, hs, "lflts")
split = convergenceStudy(sc, hs, "split-lfc")

print(lts.to_csv())
print("L2 slope LF-LTS   %.3f" % lts.slope_l2)
print("L2 slope split    %.3f" % split.slope_l2)
print("error ratios", np.round(lts.err_l2 / split.err_l2, 3))

plt.loglog(hs, lts.err_l2, "o-", label="LF-LTS")
plt.loglog(hs, split.err_l2, "s--", label="split-LFC")
plt.loglog(hs, lts.err_l2[0] * (np.array(hs) / hs[0]) ** 2, "k:", label="h^2")
plt.xlabel("h_c")
plt.ylabel("relative L2 error at T")
plt.legend()
plt.savefig("pulse_convergence.svg")
