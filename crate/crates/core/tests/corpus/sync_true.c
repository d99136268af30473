int main() {
  unsigned int x = nondet_uint();
  unsigned int y = x;
  while (x > 0) {
    x--;
    y--;
  }
  assert(y == 0);
}
