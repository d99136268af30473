int main() {
  int i = 0;
  int f = 0;
  while (i < 3) {
    if (i == 2) f = 1;
    i++;
  }
  assert(f == 0);
}
