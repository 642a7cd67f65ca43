double dot(const double *x, const double *y, int n) {
    double s = 0.0;
    #pragma omp parallel for reduction(+:s) schedule(static)
    for (int i = 0; i < n; i++) {
        s += x[i] * y[i];  // accumulate
    }
    return s;
}
