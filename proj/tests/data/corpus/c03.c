#define N 1024
#define IDX(i, j) ((i) * N + (j))

static double grid[N * N];

void relax(void) {
    for (int i = 1; i < N - 1; i++)
        for (int j = 1; j < N - 1; j++)
            grid[IDX(i, j)] = 0.25 * (grid[IDX(i - 1, j)] + grid[IDX(i + 1, j)]
                                    + grid[IDX(i, j - 1)] + grid[IDX(i, j + 1)]);
}
