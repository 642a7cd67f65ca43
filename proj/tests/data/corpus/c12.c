typedef struct { double re, im; } complex_t;

complex_t cmul(complex_t a, complex_t b) {
    complex_t r = { a.re * b.re - a.im * b.im,
                    a.re * b.im + a.im * b.re };
    return r;
}
