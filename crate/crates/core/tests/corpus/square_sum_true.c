int main() {
  int i = 0;
  int s = 0;
  while (i < 3) {
    s = s + i * i;
    i++;
  }
  assert(s == 5);
}
