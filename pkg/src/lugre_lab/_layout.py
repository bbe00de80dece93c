"""Flat parameter/state layout shared by the compiled and pure-Python kernels.

Any change here must be mirrored in ``_ckernel.pyx``.
"""

# continuous state vector
X_THETA, X_W, X_Z, X_ZH, X_WH, X_INT, X_IFILT, X_PREF, X_DFILT, X_IINT = range(10)
NX = 10

# float parameters
P_J = 0
P_PLANT = 1  # sigma0, sigma1, Fc, Fs, Fv, ws
P_OBS = 7  # same six, observer side
P_KP, P_KI, P_KD, P_TAU, P_TF = 13, 14, 15, 16, 17
P_POLE = 18
P_REF = 19  # amplitude, start, freq, phase, rate/slope, offset
P_K1, P_K2, P_KEX, P_A, P_C, P_ALPHA = 25, 26, 27, 28, 29, 30
P_KPI, P_KII = 31, 32  # inner velocity PI of a cascaded position loop
NPRM = 33

# integer parameters
I_LOOP, I_REF, I_OBS, I_K1MODE, I_K2MODE, I_PREF, I_FF, I_COMP, I_FRIC, I_CASCADE = range(10)
NIPRM = 10

LOOP_VELOCITY, LOOP_POSITION, LOOP_PRESCRIBED = 0, 1, 2
OBS_NONE, OBS_NATURAL, OBS_EXISTING, OBS_PROPOSED, OBS_ORACLE = range(5)

# recorded columns
REC_COLUMNS = ("t", "theta", "w", "z", "z_hat", "w_hat", "F", "F_hat", "u", "v",
               "ref_raw", "ref_filtered", "track_err")
NREC = len(REC_COLUMNS)

DIVERGENCE_LIMIT = 1e9
