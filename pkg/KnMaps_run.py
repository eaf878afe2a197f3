from src.KnMaps_Startup import startup

if __name__ == '__main__':
    startup()
