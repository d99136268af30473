int main() {
  int i = 0;
  int p = 1;
  while (i < 2) {
    p = p * p + 1;
    i++;
  }
  assert(p == 5);
}
