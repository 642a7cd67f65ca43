#include <string.h>

size_t count_char(const char *s, char c) {
    size_t n = 0;
    for (; *s; s++)
        if (*s == c) n++;
    return n;
}

int main(void) { return (int)count_char("a\tb\\c'd", '\''); }
