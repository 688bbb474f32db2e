"""Gothenburg grocery-delivery case: two depots, 17 stores, two campus meet points.

Distances are the asymmetric road distances (km) between sites, in the
order ``1..17, m1, m2, D1, D2``.  ``None`` marks an arc with no recorded
distance (m1<->m2, D1<->D2); such arcs are never traversed.
"""

SITE_LABELS = tuple(str(i) for i in range(1, 18)) + ("m1", "m2", "D1", "D2")

DISTANCE_ROWS = (
    # 1
    (0.0, 10.2, 15.8, 11.4, 14.6, 3.8, 10.9, 4.5, 7.9, 7.7, 7.7, 16.3, 10.3, 2.3, 4.8, 6.4, 7.0, 8.4, 3.9, 12.0, 3.9),
    # 2
    (9.1, 0.0, 20.8, 17.7, 23.2, 13.0, 15.1, 7.8, 12.0, 13.6, 11.9, 20.6, 1.1, 11.3, 11.4, 15.4, 8.7, 12.6, 12.1, 20.6, 11.1),
    # 3
    (15.7, 21.0, 0.0, 3.9, 17.6, 12.5, 5.1, 13.3, 8.1, 9.2, 8.8, 1.6, 21.1, 13.3, 7.9, 10.3, 16.2, 6.9, 13.4, 14.0, 18.2),
    # 4
    (11.3, 17.2, 3.9, 0.0, 13.2, 8.1, 8.3, 10.6, 8.3, 6.5, 8.1, 4.8, 17.3, 8.9, 6.1, 5.9, 12.9, 4.6, 9.0, 9.6, 13.8),
    # 5
    (14.8, 23.0, 17.6, 13.2, 0.0, 11.4, 23.0, 19.4, 22.8, 17.9, 22.6, 18.2, 23.2, 12.2, 15.8, 9.2, 19.8, 16.8, 12.3, 6.3, 18.1),
    # 6
    (4.5, 12.7, 12.6, 8.3, 11.5, 0.0, 14.8, 8.5, 11.8, 8.3, 11.7, 13.3, 12.9, 2.6, 5.8, 3.0, 8.9, 8.1, 0.8, 8.0, 7.9),
    # 7
    (10.0, 15.2, 5.2, 8.3, 23.1, 13.9, 0.0, 8.7, 3.5, 5.2, 4.1, 5.5, 15.5, 12.3, 7.9, 15.2, 11.5, 5.8, 12.8, 18.9, 12.5),
    # 8
    (5.1, 7.9, 10.7, 10.4, 19.2, 9.0, 8.2, 0.0, 5.2, 4.1, 4.8, 13.7, 8.0, 7.4, 3.5, 10.5, 4.1, 4.8, 6.4, 16.6, 7.6),
    # 9
    (6.7, 12.0, 8.3, 8.6, 20.8, 10.6, 3.5, 4.8, 0.0, 2.6, 0.9, 8.6, 11.9, 8.9, 4.9, 13.0, 8.2, 3.6, 9.8, 18.2, 9.2),
    # 10
    (6.1, 11.3, 9.2, 7.2, 19.1, 10.0, 5.2, 4.4, 2.3, 0.0, 2.1, 9.5, 11.4, 7.8, 2.9, 11.5, 7.6, 1.5, 7.7, 15.4, 8.6),
    # 11
    (6.8, 11.8, 8.3, 8.6, 20.9, 10.7, 3.5, 5.4, 0.3, 2.7, 0.0, 8.6, 12.0, 9.1, 4.9, 13.2, 8.3, 3.6, 9.6, 18.3, 9.4),
    # 12
    (15.0, 20.3, 1.7, 4.8, 18.5, 13.4, 5.5, 13.6, 8.6, 9.6, 9.2, 0.0, 20.4, 14.5, 8.8, 11.2, 16.5, 7.8, 14.3, 14.8, 17.5),
    # 13
    (9.7, 1.5, 21.6, 18.5, 23.9, 13.8, 15.8, 8.6, 12.8, 13.2, 12.6, 21.3, 0.0, 12.1, 12.2, 15.1, 9.5, 13.4, 12.3, 21.4, 11.7),
    # 14
    (3.4, 11.6, 13.2, 8.8, 12.0, 2.6, 12.3, 5.9, 9.3, 7.1, 9.1, 13.8, 11.8, 0.0, 4.6, 3.1, 8.4, 6.9, 2.5, 9.2, 6.8),
    # 15
    (5.0, 11.3, 8.4, 5.6, 15.9, 6.5, 9.0, 4.6, 4.3, 2.9, 4.0, 9.0, 11.4, 4.7, 0.0, 7.6, 7.5, 2.7, 5.2, 12.3, 8.0),
    # 16
    (7.2, 15.4, 10.3, 5.9, 9.1, 2.9, 14.7, 8.4, 11.7, 11.5, 11.5, 10.9, 14.2, 3.3, 7.1, 0.0, 10.8, 9.4, 3.8, 6.3, 10.5),
    # 17
    (4.4, 8.7, 16.2, 13.4, 18.5, 8.3, 11.0, 3.5, 8.2, 7.9, 7.8, 16.5, 8.1, 6.6, 6.8, 10.3, 0.0, 8.5, 8.6, 15.9, 6.4),
    # m1
    (6.6, 11.9, 7.6, 4.9, 17.0, 10.5, 5.9, 4.6, 3.3, 1.6, 3.3, 8.9, 12.0, 5.8, 2.0, 9.7, 8.1, 0.0, None, 13.3, 9.1),
    # m2
    (3.9, 12.4, 14.4, 8.9, 12.2, 0.9, 13.4, 8.5, 10.1, 9.4, 10.2, 14.5, 13.2, 3.0, 6.0, 3.7, 7.7, None, 0.0, 8.7, 7.5),
    # D1
    (11.7, 19.9, 13.8, 9.4, 6.7, 7.9, 19.3, 14.2, 17.6, 14.1, 17.4, 14.4, 20.1, 9.1, 12.0, 6.2, 16.7, 13.0, 8.7, 0.0, None),
    # D2
    (3.6, 10.9, 17.8, 13.8, 18.0, 7.7, 12.0, 5.7, 9.0, 10.6, 8.9, 17.5, 11.1, 6.1, 7.2, 9.8, 7.1, 9.6, 7.2, None, 0.0),
)

# Customer time windows in minutes; stores 1-9 belong to company R, 10-17 to B.
TIME_WINDOWS = {
    1: (0, 90), 2: (30, 60), 3: (0, 90), 4: (30, 120), 5: (30, 120),
    6: (60, 150), 7: (60, 150), 8: (90, 180), 9: (90, 180),
    10: (0, 90), 11: (0, 90), 12: (30, 120), 13: (60, 90), 14: (30, 120),
    15: (60, 150), 16: (60, 150), 17: (90, 180),
}

COMPANY_R_CUSTOMERS = tuple(range(1, 10))
COMPANY_B_CUSTOMERS = tuple(range(10, 18))

SERVICE_FEE = 150.0
SPEED_KMH = 40.0
CUSTOMER_SERVICE_MIN = 2.0
MEET_SERVICE_MIN = 10.0
MAX_WAIT_MIN = 5.0
BATTERY_KWH = 60.0
BATTERY_MIN_KWH = 12.0
CONSUMPTION_KWH_PER_KM = 1.0
CHARGE_RATE_KW = 60.0
DRIVER_COST_PER_MIN = 2.05
ENERGY_COST_ELECTRIC = 3.0
ENERGY_COST_CONVENTIONAL = 6.0
