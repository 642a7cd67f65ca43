void lock_demo(omp_lock_t *l, int *shared_count) {
    omp_set_lock(l);
    (*shared_count)++;
    omp_unset_lock(l);
}
