"""Expected values frozen from ``oracles.py`` (50-digit evaluation).

``test_oracles.py`` re-derives each entry, so a change to an oracle that
moves a value is caught before it can silently move a package test.
"""

# tilted family: alpha -> (s, tau)
TILTED_SLOPE_OFFSET = {
    0.0: (0.603553390593273762, -0.707106781186547524),
    0.5: (0.790662893713356900, -1.305158649140883412),
    1.0: (1.132455532033675866, -2.581138830084189666),
}
# bound evaluated at the LHS value alpha + 2 (equals cos^2 theta)
TILTED_F_AT_LHS = {0.0: 0.5, 0.5: 0.671498585142508837, 1.0: 0.816227766016837933}
# observed value where the DI bound reaches cos^2 theta
DI_CROSSING = {0.0: 2.105822933719019452, 0.5: 2.654667678527412073, 1.0: 3.102784037200911448}
PRIOR_CHSH_AT_1_99957 = 0.501895407520134699
THREE_SETTING_SLOPE = 0.472951453111403041
THRESHOLD_P_THREE = 0.823801506930343894
THRESHOLD_P_TWO = 0.853553390593273762
THREE_SETTING_C = 0.352396986139312211
COPIES_THREE_EPS_001 = 1305
COPIES_THREE_EPS_01 = 129
