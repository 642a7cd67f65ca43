int my_func(int my_arg) {
    int my_local = my_arg << 2;
    return my_local >= 16 ? my_local : -my_local;
}
