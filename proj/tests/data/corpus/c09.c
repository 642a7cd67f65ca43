float hexes[] = { 0x1p-3f, 1.5e+10f, .25f, 3.f };
int octal = 0755, hex = 0xDEADbeef, bin = 42;
