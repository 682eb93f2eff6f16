"""Index layout shared by the compiled and pure-Python integration kernels.

Both kernels read scalar parameters from one flat float64 vector and keep
the plant state and the demagnetization controller state in small flat
vectors, so the two implementations stay interchangeable.
"""

# parameter vector
P_VHAT = 0
P_OMEGA = 1
P_TD = 2
P_TA = 3
P_DC_A = 4
P_DC_B = 5
P_DC_C = 6
P_KNEE = 7
P_LMAG = 8
P_LSAT = 9
P_RCORE = 10
P_RWIND = 11
P_LF = 12
P_CF = 13
P_RDAMP = 14
P_ISAT = 15
P_VD = 16
P_KP = 17
P_KI = 18
P_VCLAMP = 19
P_TIMEOUT = 20
P_SLEW = 21
P_SETTLE = 22
N_PAR = 23

# voltage sources
SRC_OFF = 0
SRC_HARD = 1
SRC_ULTRAFAST = 2
SRC_SPIRAL = 3
SRC_DC = 4
SRC_DEMAG = 5

# plant state: inverter-side inductor current, capacitor (PCC) voltage, flux
X_IINV = 0
X_VC = 3
X_LAM = 6
N_STATE = 9

# demag controller state
C_PHASE = 0
C_TAU_STEPS = 1
C_ELAPSED_STEPS = 2
C_INTEG = 3
C_CMD = 6
C_REF = 9
C_LATCH_A = 12
C_LATCH_C = 13
C_STARTED = 14
C_SETTLE_STEPS = 15
N_CTL = 16

PH_SATURATE_POSITIVE = 0
PH_REVERSE_SATURATE = 1
PH_RETURN_TO_ORIGIN = 2
PH_DONE = 3

# recorded columns
COL_T = 0
COL_VINV = 1
COL_VPCC = 4
COL_IINV = 7
COL_IPCC = 10
COL_LAM = 13
N_COL = 16

# peak tracker: |i_inv| a..c, |i_pcc| a..c
N_PEAK = 6

# kernel status codes
ST_OK = 0
ST_DEMAG_DONE = 1
ST_TIMEOUT = -1
ST_DIVERGED = -2
