int main() {
  int x = nondet_int();
  assume(x > 0);
  int y = x + 1;
  assert(y > 0);
}
