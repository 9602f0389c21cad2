"""Worked ten-point example: input table and the expected build products."""

# row i has original id i
X = [6, 9, 0, 2, 4, 3, 5, 1, 8, 7]
Y = [9, 3, 2, 7, 1, 0, 6, 8, 4, 5]
Z = [1, 9, 5, 3, 4, 0, 2, 8, 6, 7]

N_DB = 2
N_K = 5

# original ids in ascending order of the last dimension
BY_LAST = [5, 0, 6, 3, 4, 2, 8, 9, 7, 1]

# structured table, one entry per sub-database, rows x, y, z
SUBDB_ROWS = [
    ([2, 3, 4, 5, 6], [7, 0, 1, 6, 9], [3, 0, 4, 2, 1]),
    ([0, 1, 7, 8, 9], [2, 8, 5, 4, 3], [5, 8, 7, 6, 9]),
]
# original id of every structured row
PERM = [3, 5, 4, 6, 0, 2, 7, 9, 8, 1]

# index arrays for y and z, global structured indexes
INDEX_Y = [[1, 2, 3, 0, 4], [5, 9, 8, 7, 6]]
INDEX_Z = [[1, 4, 3, 0, 2], [5, 8, 7, 6, 9]]

# line parameters (m, q) rounded to two decimals, per sub-database and dimension
LINES = [
    [(1.00, -2.00), (0.44, 0.00), (1.00, 0.00)],
    [(0.44, 0.00), (0.67, -1.33), (1.00, -5.00)],
]

# k arrays per sub-database and dimension
KVEC = [
    [[0, 1, 2, 4, 5], [0, 2, 2, 3, 5], [0, 1, 2, 4, 5]],
    [[5, 7, 7, 7, 10], [5, 7, 8, 9, 10], [5, 6, 7, 9, 10]],
]

QUERY = [(2, 8), (5, 6), (1, 3)]
ANSWER = {6}
# window counts of sub-database 0 under QUERY
COUNTS_SUBDB0 = [5, 1, 3]
