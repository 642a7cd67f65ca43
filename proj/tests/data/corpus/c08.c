unsigned long long fib(unsigned n) {
    unsigned long long a = 0ULL, b = 1ULL;
    while (n--) {
        unsigned long long t = a + b;
        a = b;
        b = t;
    }
    return a;
}
